""" Quenched sampling engine: the state-valued Markov chain of repeated
measurements in a fixed environment realization

At step n (n = 1..N) the fiber at theta^n(omega_0) is measured: outcome a
is drawn with the Born probability Tr(v_a rho v_a^dagger) and the state is
conditioned on it with ``project_action``.
"""
import csv
import logging
import time

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import (
    DqtrajError,
    InvalidPatternError,
    NullBranchingError,
)
from .matrixcore import NULL_TRACE_TOL, project_action
from .output import metadata_line
from .rng import Purpose, derive_seed, stream
from .util import repr_str


class TrajectoryRecord(object):
    """ One sampled trajectory and its provenance """
    def __init__(self, env_start, seed, alphabet, outcome_indices,
                 step_probs, states=None, wall_clock=None):
        self.env_start = env_start
        self.seed = seed
        self.alphabet = tuple(alphabet)
        self.outcome_indices = np.asarray(outcome_indices, dtype=np.int64)
        self.step_probs = np.asarray(step_probs, dtype=float)
        self.states = states
        self.wall_clock = wall_clock

    def __repr__(self):
        return repr_str(self, ('steps', 'seed', 'wall_clock'))

    def __len__(self):
        return len(self.outcome_indices)

    @property
    def steps(self):
        """ N """
        return len(self.outcome_indices)

    @property
    def outcomes(self):
        """ Outcome labels, step 1 first """
        return [self.alphabet[idx] for idx in self.outcome_indices]

    def word_probability(self):
        """ Product of the step probabilities: the quenched probability of
        the sampled word
        """
        return float(np.prod(self.step_probs))

    def _pattern_indices(self, pattern):
        lookup = {label: idx for idx, label in enumerate(self.alphabet)}
        try:
            return [lookup[str(label)] for label in pattern]
        except KeyError as ex:
            raise InvalidPatternError(
                "pattern label %s not in alphabet %s" % (
                    ex, ', '.join(self.alphabet),
                ),
                module='trajectory',
            )

    def pattern_hits(self, pattern):
        """ Boolean per window start n = 1..N-m+1: whether the outcomes at
        n..n+m-1 spell ``pattern``

        Examples:

          >>> record = TrajectoryRecord(None, 0, ['a', 'b'], [0, 0, 1, 0, 0],
          ...                           [1.0] * 5)
          >>> record.pattern_hits(['a', 'a']).tolist()
          [True, False, False, True]
        """
        pattern = self._pattern_indices(pattern)
        if not pattern:
            raise InvalidPatternError("pattern must have at least one label",
                                      module='trajectory')
        windows = self.steps - len(pattern) + 1
        if windows < 1:
            return np.zeros(0, dtype=bool)
        hits = np.ones(windows, dtype=bool)
        for offset, idx in enumerate(pattern):
            hits &= self.outcome_indices[offset:offset + windows] == idx
        return hits

    def pattern_count(self, pattern):
        """ Number of sliding-window occurrences of ``pattern`` """
        return int(np.sum(self.pattern_hits(pattern)))

    def pattern_frequency(self, pattern):
        """ Sliding-window occurrences divided by N, the trajectory length.
        For an m-letter pattern only N-m+1 windows exist, a bias of order m/N

        :raises InvalidPatternError: If the pattern is longer than the
          trajectory

        Examples:

          >>> record = TrajectoryRecord(None, 0, ['a', 'b'], [0, 0, 1, 0],
          ...                           [1.0] * 4)
          >>> record.pattern_frequency(['a'])
          0.75
          >>> record.pattern_frequency(['a', 'a'])
          0.25
        """
        hits = self.pattern_hits(pattern)
        if hits.size == 0:
            raise InvalidPatternError(
                "pattern of %d labels is longer than the trajectory (%d "
                "steps)" % (len(pattern), self.steps),
                module='trajectory',
            )
        return float(np.sum(hits)) / self.steps

    def block_frequencies(self, pattern, blocks):
        """ Pattern frequency within each of ``blocks`` consecutive,
        equal-as-possible runs of window starts
        """
        hits = self.pattern_hits(pattern)
        if hits.size < blocks:
            raise ValueError("Need at least %d windows for %d blocks" % (
                blocks, blocks,
            ))
        return np.array([
            np.mean(part) for part in np.array_split(hits, blocks)
        ])


def _draw_index(probs, uniform, tol):
    """ Cumulative sampling in alphabet order; labels with probability
    ``<= tol`` are never drawn and leftover mass goes to the last drawable
    label
    """
    probs = np.where(probs > tol, probs, 0.0)
    positive = np.flatnonzero(probs)
    if positive.size == 0:
        raise NullBranchingError()
    idx = int(np.searchsorted(np.cumsum(probs), uniform, side='right'))
    if idx >= len(probs):
        idx = int(positive[-1])
    return idx


def sample_trajectory(env, omega0, state0, steps, seed, keep_states=False,
                      tol=NULL_TRACE_TOL):
    """ Sample N measurement outcomes starting from ``state0`` at
    ``omega0``

    :param EnvSystem env: the environment
    :param omega0: starting point; step n measures the fiber at
      theta^n(omega0)
    :param QuantumState state0: initial state
    :param int steps: N >= 1
    :param int seed: 64 bit seed of the trajectory's Philox stream
    :param bool keep_states: also record the N+1 states

    :raises ValueError: If ``steps`` is less than 1
    :raises NullBranchingError: If every branch at some step has probability
      ``<= tol``

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import identity_kraus
      >>> from .matrixcore import QuantumState
      >>> env = EnvSystem.constant(identity_kraus())
      >>> record = sample_trajectory(
      ...     env, FinitePoint(0), QuantumState.maximally_mixed(2), 5, seed=1)
      >>> record.outcomes
      ['I', 'I', 'I', 'I', 'I']
      >>> record.step_probs.tolist()
      [1.0, 1.0, 1.0, 1.0, 1.0]
    """
    if steps < 1:
        raise ValueError("Must sample at least 1 step, got %s" % steps)

    started = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(seed))
    uniforms = rng.random(steps)

    point = omega0
    state = state0
    indices = np.empty(steps, dtype=np.int64)
    probs = np.empty(steps, dtype=float)
    states = [state0] if keep_states else None

    for step in range(steps):
        point = env.step(point)
        kraus = env.ensemble_at(point)
        born = kraus.born_probabilities(state)
        try:
            idx = _draw_index(born, uniforms[step], tol)
        except NullBranchingError:
            raise NullBranchingError(
                "numerically null branching at step %d" % (step + 1)
            )
        indices[step] = idx
        probs[step] = born[idx]
        state = project_action(kraus.ops[idx], state, tol)
        if keep_states:
            states.append(state)

    return TrajectoryRecord(
        env_start=omega0,
        seed=seed,
        alphabet=env.alphabet,
        outcome_indices=indices,
        step_probs=probs,
        states=states,
        wall_clock=time.perf_counter() - started,
    )


class FixedOmega(object):
    """ Every trajectory starts at the same environment point """
    name = 'fixed'

    def __init__(self, point):
        self.point = point

    def __repr__(self):
        return repr_str(self, ('point',))

    def start(self, env, master_seed, index):
        """ Private copy of the shared point """
        return env.copy_point(self.point)


class ResampleOmega(object):
    """ Each trajectory draws its own invariant-distributed start point """
    name = 'resample'

    def __repr__(self):
        return '<ResampleOmega>'

    def start(self, env, master_seed, index):
        """ Invariant draw from the trajectory's environment stream """
        return env.sample_invariant(
            stream(master_seed, Purpose.environment, index)
        )


class TrajectoryBatch(object):
    """ Trajectories of a batch, in index order, plus per-index errors """
    def __init__(self, records, errors, master_seed, omega_mode):
        self.records = records
        self.errors = errors
        self.master_seed = master_seed
        self.omega_mode = omega_mode

    def __repr__(self):
        return '<TrajectoryBatch: %d records, %d errors>' % (
            len(self.completed), len(self.errors),
        )

    def __len__(self):
        return len(self.records)

    @property
    def completed(self):
        """ Records that didn't error """
        return [record for record in self.records if record is not None]

    def frequencies(self, pattern):
        """ Per-trajectory sliding-window frequencies of ``pattern`` """
        return np.array([
            record.pattern_frequency(pattern) for record in self.completed
        ])


def sample_batch(env, assignment, steps, count, master_seed, omega_mode,
                 threads=1, keep_states=False):
    """ ``count`` independent trajectories

    Trajectory i uses seed ``derive_seed(master_seed, trajectory, i)`` and,
    when resampling, start point drawn from the ``(environment, i)`` stream,
    so the result doesn't depend on ``threads``

    :param StateAssignment assignment: initial state per start point
    :param omega_mode: ``FixedOmega`` or ``ResampleOmega``
    :param int threads: worker pool size

    :raises ValueError: If ``count`` is less than 1

    Examples:

      >>> from .assignments import FixedState
      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import projective_kraus
      >>> from .matrixcore import QuantumState
      >>> env = EnvSystem.constant(projective_kraus())
      >>> batch = sample_batch(
      ...     env, FixedState(QuantumState.maximally_mixed(2)), 4, 3,
      ...     master_seed=9, omega_mode=FixedOmega(FinitePoint(0)))
      >>> [len(set(record.outcomes)) for record in batch.records]
      [1, 1, 1]
    """
    if count < 1:
        raise ValueError("Must sample at least 1 trajectory, got %s" % count)

    def run_one(index):
        """ Sample trajectory ``index``, or capture its error """
        try:
            point = omega_mode.start(env, master_seed, index)
            state = assignment.state_at(env, point)
            record = sample_trajectory(
                env, point, state, steps,
                derive_seed(master_seed, Purpose.trajectory, index),
                keep_states=keep_states,
            )
            logging.debug("Trajectory %d done in %.3fs", index,
                          record.wall_clock)
            return record, None
        except DqtrajError as ex:
            logging.warning("Trajectory %d failed: %s", index, ex)
            return None, ex

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, range(count)))
    else:
        results = [run_one(index) for index in range(count)]

    return TrajectoryBatch(
        records=[record for record, _ in results],
        errors={
            index: error
            for index, (_, error) in enumerate(results)
            if error is not None
        },
        master_seed=master_seed,
        omega_mode=omega_mode.name,
    )


def write_trajectories_csv(batch, handle, metadata=None):
    """ One row per step: trajectory_id, n, outcome, step_prob, after a
    ``# key=value,...`` metadata line

    Examples:

      >>> import io
      >>> record = TrajectoryRecord(None, 0, ['a', 'b'], [1, 0], [0.25, 1.0])
      >>> batch = TrajectoryBatch([record], {}, 3, 'fixed')
      >>> out = io.StringIO()
      >>> write_trajectories_csv(batch, out, {'d': 2})
      >>> print(out.getvalue().replace('\\r', ''))
      # d=2,master_seed=3,omega_mode=fixed
      trajectory_id,n,outcome,step_prob
      0,1,b,0.25
      0,2,a,1
      <BLANKLINE>
    """
    metadata = dict(metadata or {})
    metadata.setdefault('master_seed', batch.master_seed)
    metadata.setdefault('omega_mode', batch.omega_mode)
    handle.write(metadata_line(metadata) + '\n')
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('trajectory_id', 'n', 'outcome', 'step_prob'))
    for traj_id, record in enumerate(batch.records):
        if record is None:
            continue
        for step, (label, prob) in enumerate(
                zip(record.outcomes, record.step_probs), start=1):
            writer.writerow((traj_id, step, label, '%.17g' % prob))


def write_trajectories_npz(batch, path):
    """ Binary dump: outcome indices and step probabilities as
    (trajectories, N) arrays, plus seeds and the alphabet
    """
    records = batch.completed
    np.savez_compressed(
        path,
        outcomes=np.array([record.outcome_indices for record in records]),
        step_probs=np.array([record.step_probs for record in records]),
        seeds=np.array([record.seed for record in records], dtype=np.uint64),
        alphabet=np.array(records[0].alphabet if records else []),
        master_seed=np.array(batch.master_seed, dtype=np.uint64),
    )
