""" Stationary states, the dynamical-ergodicity certifier, and the
law-of-large-numbers and ergodic-theorem verifiers

Stationary states are computed by averaging backward-orbit pushforwards

    x_n = phi_omega o phi_(theta^-1 omega) o ... o phi_(theta^(1-n) omega)
          (theta_(theta^-n omega))

The plain Cesaro mean of x_1..x_N converges like 1/N even when the x_n
converge geometrically, so the solver uses the half-window mean of
x_(N/2+1)..x_N, which has the same limit, and compares it at doubling
checkpoints N/2 and N.
"""
import logging
import threading

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg
import scipy.stats

from .assignments import FixedState, StateAssignment
from .channels import UNIT_EIGENVALUE_TOL, channel_of, compose_forward
from .environment import EnvKind
from .exceptions import (
    DynErgError,
    QuadratureUnavailableError,
    UnconvergedError,
)
from .matrixcore import (
    QuantumState,
    hs_inner,
    psd_repair,
    random_state,
    trace_distance,
    trace_norm,
    unvec,
    vec,
)
from .measures import (
    CylinderSet,
    MonteCarlo,
    annealed_cylinder,
    annealed_exact,
    future_expectation,
)
from .rng import Purpose, derive_seed, stream
from .trajectory import FixedOmega, ResampleOmega, sample_batch
from .util import doubling_checkpoints, repr_str


SOLVER_TOL_EXACT = 1e-8
SOLVER_TOL_STOCHASTIC = 1e-5
MIN_ITER = 8
MAX_ITER = 2 ** 16
ORBIT_LENGTH = 8
PAIR_FACTOR = 10
BATCH_BLOCKS = 20
TARGET_SAMPLES = 256
Z_THRESHOLD = 3.0


def default_tol(env):
    """ Solver tolerance: 1e-8 for deterministic environments, 1e-5 for
    i.i.d. and Markov ones
    """
    if env.kind in (EnvKind.iid, EnvKind.markov):
        return SOLVER_TOL_STOCHASTIC
    return SOLVER_TOL_EXACT


def bonferroni_z(comparisons, sigmas=Z_THRESHOLD):
    """ Two-sided z threshold keeping the family-wise level of one
    ``sigmas`` test over ``comparisons`` tests

    Examples:

      >>> round(bonferroni_z(1), 9)
      3.0
      >>> bonferroni_z(6) > 3.5
      True
    """
    comparisons = max(int(comparisons), 1)
    tail = scipy.stats.norm.sf(sigmas) / comparisons
    return float(scipy.stats.norm.isf(tail))


class StationaryDiagnostics(object):
    """ Convergence record of one ``stationary_state`` solve """
    def __init__(self, converged, iterations, increment, residual, tol,
                 history):
        self.converged = converged
        self.iterations = iterations
        self.increment = increment
        self.residual = residual
        self.tol = tol
        self.history = history

    def __repr__(self):
        return repr_str(
            self, ('converged', 'iterations', 'increment', 'residual', 'tol'),
        )


def _as_assignment(seed, dim):
    if seed is None:
        return FixedState(QuantumState.maximally_mixed(dim))
    if isinstance(seed, QuantumState):
        return FixedState(seed)
    if isinstance(seed, StateAssignment):
        return seed
    raise TypeError("Seed must be a QuantumState or StateAssignment, got %r"
                    % (seed,))


def stationary_state(env, point, seed=None, max_iter=MAX_ITER, tol=None,
                     min_iter=MIN_ITER):
    """ Stochastically stationary state at ``point``

    :param seed: seed state, or a ``StateAssignment`` for a random seed
      state; defaults to I/d
    :param int max_iter: largest N
    :param float tol: trace-norm tolerance on the increment between
      checkpoints and on the stationarity residual; defaults to
      ``default_tol(env)``

    :returns: (QuantumState, StationaryDiagnostics); when unconverged the
      state is the last iterate

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import depolarizing_kraus
      >>> env = EnvSystem.constant(depolarizing_kraus(0.4))
      >>> state, diag = stationary_state(
      ...     env, FinitePoint(0), QuantumState.pure(2, 0))
      >>> diag.converged, diag.residual <= 1e-10
      (True, True)
      >>> bool(np.allclose(state.mat, np.eye(2) / 2, atol=1e-10))
      True
    """
    tol = default_tol(env) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive, got %s" % tol)
    if max_iter < 2:
        raise ValueError("max_iter must be at least 2, got %s" % max_iter)
    seed = _as_assignment(seed, env.dim)

    checkpoints = doubling_checkpoints(max_iter, start=max(min_iter, 2))
    halves = set(checkpoint // 2 for checkpoint in checkpoints)
    forward = env.ensemble_at(env.step(point)).superop_matrix

    dim2 = env.dim ** 2
    composed = np.eye(dim2, dtype=complex)
    total = np.zeros(dim2, dtype=complex)
    current = vec(seed.state_at(env, point).mat)
    snapshots = {0: (total.copy(), current.copy())}

    back = point
    estimate = None
    increment = float('inf')
    residual = float('inf')
    history = []
    converged = False
    iterations = 0

    for step in range(1, max_iter + 1):
        composed = composed @ env.ensemble_at(back).superop_matrix
        back = env.step_back(back)
        current = composed @ vec(seed.state_at(env, back).mat)
        total += current
        iterations = step

        if step in halves:
            snapshots[step] = (total.copy(), current.copy())
        if step != checkpoints[0]:
            continue
        checkpoints.pop(0)

        half = step // 2
        half_total, half_current = snapshots[half]
        window = step - half
        new_estimate = (total - half_total) / window
        residual = trace_norm(
            unvec(forward @ (current - half_current), env.dim)
        ) / window
        if estimate is not None:
            increment = trace_norm(unvec(new_estimate - estimate, env.dim))
        estimate = new_estimate
        history.append((step, increment, residual))
        logging.debug("Stationary solve N=%d increment=%.3g residual=%.3g",
                      step, increment, residual)
        if increment < tol and residual < tol:
            converged = True
            break
        if not checkpoints:
            break

    if not converged:
        logging.warning("Stationary solve unconverged after %d iterations "
                        "(increment %.3g, residual %.3g, tol %.3g)",
                        iterations, increment, residual, tol)

    state = psd_repair(unvec(estimate, env.dim))
    return state, StationaryDiagnostics(
        converged=converged,
        iterations=iterations,
        increment=increment,
        residual=residual,
        tol=tol,
        history=history,
    )


class StationaryWeights(object):
    """ Joint stationary matrices R[s] = E[1{x_0 = s} rho_omega] of a finite
    environment
    """
    def __init__(self, weights, unique, converged):
        self.weights = weights
        self.unique = unique
        self.converged = converged

    def __repr__(self):
        return repr_str(self, ('unique', 'converged'))


def _forward_transfer(env):
    """ Map R -> R' with R'[t] = sum_s P(s, t) phi_t(R[s]) on stacked
    vectorized weights
    """
    _, transition = env.symbol_chain()
    superops = [channel_of(fiber).matrix for fiber in env.fibers]

    def transfer(weights):
        """ One environment step of the joint weights """
        mixed = transition.T @ weights
        return np.array([
            superops[sym] @ mixed[sym] for sym in range(len(superops))
        ])

    return transfer, transition, superops


def stationary_weights(env, max_iter=MAX_ITER, tol=None):
    """ Solve R[t] = sum_s P(s, t) phi_t(R[s]), sum_s Tr R[s] = 1

    A simple unit eigenvalue of the joint transfer matrix gives R directly;
    otherwise R is the half-window Cesaro limit of the transfer iteration
    from R[s] = pi(s) I/d

    :raises QuadratureUnavailableError: For the torus

    Examples:

      >>> from .environment import EnvSystem
      >>> from .families import depolarizing_kraus
      >>> env = EnvSystem.markov(
      ...     [depolarizing_kraus(0.4), depolarizing_kraus(0.2)],
      ...     [[0.7, 0.3], [0.45, 0.55]])
      >>> solved = stationary_weights(env)
      >>> solved.unique
      True
      >>> [round(float(np.trace(mat).real), 12) for mat in solved.weights]
      [0.6, 0.4]
    """
    if not env.kind.finite:
        raise QuadratureUnavailableError(
            "stationary weights need a finite environment", module='ergodics',
        )
    tol = default_tol(env) if tol is None else tol
    transfer, transition, superops = _forward_transfer(env)
    size = len(superops)
    dim2 = env.dim ** 2

    joint = np.zeros((size * dim2, size * dim2), dtype=complex)
    for src in range(size):
        for dst in range(size):
            if transition[src, dst]:
                joint[dst * dim2:(dst + 1) * dim2,
                      src * dim2:(src + 1) * dim2] = (
                          transition[src, dst] * superops[dst])
    eigvals, eigvecs = scipy.linalg.eig(joint)
    unit = np.flatnonzero(np.abs(eigvals - 1) < UNIT_EIGENVALUE_TOL)

    if unit.size == 1:
        vector = eigvecs[:, unit[0]].reshape(size, env.dim, env.dim)
        vector = vector / np.sum(np.trace(vector, axis1=1, axis2=2))
        weights = (vector + np.conjugate(np.transpose(vector, (0, 2, 1)))) / 2
        return StationaryWeights(weights, unique=True, converged=True)

    logging.warning("Joint transfer has %d unit eigenvalues; averaging the "
                    "transfer iteration from I/d", unit.size)
    initial, _ = env.symbol_chain()
    current = np.array([
        weight * vec(np.eye(env.dim) / env.dim) for weight in initial
    ])
    total = np.zeros_like(current)
    snapshots = {0: total.copy()}
    checkpoints = doubling_checkpoints(max_iter, start=MIN_ITER)
    halves = set(checkpoint // 2 for checkpoint in checkpoints)
    estimate = None
    converged = False
    for step in range(1, max_iter + 1):
        current = transfer(current)
        total += current
        if step in halves:
            snapshots[step] = total.copy()
        if step != checkpoints[0]:
            continue
        checkpoints.pop(0)
        new_estimate = (total - snapshots[step // 2]) / (step - step // 2)
        if estimate is not None and np.sum([
                trace_norm(unvec(diff, env.dim))
                for diff in new_estimate - estimate]) < tol:
            estimate = new_estimate
            converged = True
            break
        estimate = new_estimate
        if not checkpoints:
            break

    weights = np.array([unvec(row, env.dim) for row in estimate])
    weights = (weights + np.conjugate(np.transpose(weights, (0, 2, 1)))) / 2
    return StationaryWeights(weights, unique=False, converged=converged)


class StationaryAssignment(StateAssignment):
    """ omega -> rho_omega, the stationary state, solved on demand

    Point solves of constant, periodic and torus points are cached
    """
    def __init__(self, max_iter=MAX_ITER, tol=None, override=False):
        """
        :param bool override: use unconverged solves instead of raising
        """
        self.max_iter = max_iter
        self.tol = tol
        self.override = override
        self._cache = {}
        self._weights = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return repr_str(self, ('max_iter', 'tol', 'override'))

    def describe(self):
        return 'stationary'

    def state_at(self, env, point):
        """
        :raises UnconvergedError: If the solve is unconverged and not
          overridden
        """
        cacheable = env.kind is not EnvKind.iid and \
            env.kind is not EnvKind.markov
        key = (id(env), point) if cacheable else None
        if key is not None:
            with self._lock:
                if key in self._cache:
                    return self._cache[key]

        state, diag = stationary_state(
            env, point, max_iter=self.max_iter, tol=self.tol,
        )
        if not diag.converged and not self.override:
            raise UnconvergedError(
                "stationary state unconverged after %d iterations "
                "(increment %.3g, residual %.3g)" % (
                    diag.iterations, diag.increment, diag.residual,
                )
            )
        if key is not None:
            with self._lock:
                self._cache[key] = state
        return state

    def symbol_weights(self, env):
        """
        :raises UnconvergedError: If the weights didn't converge and not
          overridden
        """
        with self._lock:
            solved = self._weights.get(id(env))
        if solved is None:
            solved = stationary_weights(env, self.max_iter, self.tol)
            with self._lock:
                self._weights[id(env)] = solved
        if not solved.converged and not self.override:
            raise UnconvergedError("stationary weights unconverged")
        return solved.weights


class StationaryProfile(object):
    """ Stationary states at a set of anchor points """
    def __init__(self, anchors, states, diagnostics):
        self.anchors = anchors
        self.states = states
        self.diagnostics = diagnostics

    def __repr__(self):
        return repr_str(self, ('converged', 'residual', 'iterations'))

    @property
    def residual(self):
        """ Largest stationarity residual over the anchors """
        return max(diag.residual for diag in self.diagnostics)

    @property
    def iterations(self):
        """ Largest N used over the anchors """
        return max(diag.iterations for diag in self.diagnostics)

    @property
    def converged(self):
        """ Whether every anchor converged """
        return all(diag.converged for diag in self.diagnostics)


def _parallel_map(func, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def sample_anchors(env, count, master_seed):
    """ ``count`` invariant draws, anchor i from the (anchor, i) stream """
    return [env.sample_invariant(stream(master_seed, Purpose.anchor, idx))
            for idx in range(count)]


def stationary_profile(env, anchors=4, seed=None, max_iter=MAX_ITER,
                       tol=None, master_seed=0, threads=1):
    """ Solve the stationary state at each anchor

    :param anchors: anchor count (sampled from ``master_seed``) or a list
      of points
    """
    if isinstance(anchors, int):
        anchors = sample_anchors(env, anchors, master_seed)

    def solve(anchor):
        """ Solve at a private copy of ``anchor`` """
        return stationary_state(env, env.copy_point(anchor), seed,
                                max_iter=max_iter, tol=tol)

    results = _parallel_map(solve, anchors, threads)
    return StationaryProfile(
        anchors=list(anchors),
        states=[state for state, _ in results],
        diagnostics=[diag for _, diag in results],
    )


class CheckRow(object):
    """ One compared quantity of a report """
    def __init__(self, quantity, value, target, tolerance, passed):
        self.quantity = quantity
        self.value = value
        self.target = target
        self.tolerance = tolerance
        self.passed = passed

    def __repr__(self):
        return repr_str(
            self, ('quantity', 'value', 'target', 'tolerance', 'passed'),
        )

    def as_tuple(self):
        """ (quantity, value, target, tolerance, PASS/FAIL) """
        return (self.quantity, self.value, self.target, self.tolerance,
                'PASS' if self.passed else 'FAIL')


class DynErgReport(object):
    """ Verdict of ``dyn_erg_certify``; PASS is evidence, not proof """
    def __init__(self, passed, tol, rows, separating_pair=None,
                 separating_states=None, profiles=None,
                 unit_eigenvalues=None):
        self.passed = passed
        self.tol = tol
        self.rows = rows
        self.separating_pair = separating_pair
        self.separating_states = separating_states
        self.profiles = profiles
        self.unit_eigenvalues = unit_eigenvalues

    def __repr__(self):
        return repr_str(self, ('passed', 'tol', 'separating_pair'))

    def __bool__(self):
        return self.passed


def seed_states(dim, count, master_seed):
    """ |0><0|, |d-1><d-1|, then random states from the seed-state streams
    """
    states = [QuantumState.pure(dim, 0), QuantumState.pure(dim, dim - 1)]
    for idx in range(2, count):
        states.append(random_state(
            dim, stream(master_seed, Purpose.seed_state, idx),
        ))
    return states[:count]


def _period_channel(env):
    if env.kind is EnvKind.constant:
        return channel_of(env.fibers[0])
    if env.kind is EnvKind.periodic:
        return compose_forward(env.fibers)
    return None


def dyn_erg_certify(env, anchors=4, seeds=4, max_iter=MAX_ITER, tol=None,
                    master_seed=0, threads=1, orbit_length=ORBIT_LENGTH):
    """ Heuristic check that the stationary state is unique

    From each of ``seeds`` initial states at each of ``anchors`` invariant
    draws, solve the stationary state. PASS needs every solve converged with
    residual below ``tol``, all limits at an anchor within 10 tol of each
    other, the solution transported one step along the orbit to agree with
    the solve there (over ``orbit_length`` steps), and for constant and
    periodic environments a simple unit eigenvalue of the period channel

    :raises ValueError: If ``anchors`` or ``seeds`` is less than 2

    Examples:

      >>> from .environment import EnvSystem
      >>> from .families import projective_kraus
      >>> report = dyn_erg_certify(EnvSystem.constant(projective_kraus()))
      >>> report.passed
      False
      >>> report.separating_pair[3] >= 0.5
      True
    """
    if anchors < 2 or seeds < 2:
        raise ValueError("Must use at least 2 anchors and 2 seeds, got %s "
                         "and %s" % (anchors, seeds))
    tol = default_tol(env) if tol is None else tol
    points = sample_anchors(env, anchors, master_seed)
    starts = seed_states(env.dim, seeds, master_seed)

    tasks = [(a_idx, s_idx) for a_idx in range(anchors)
             for s_idx in range(seeds)]

    def solve(task):
        """ Solve anchor/seed pair ``task`` """
        a_idx, s_idx = task
        return stationary_state(env, env.copy_point(points[a_idx]),
                                starts[s_idx], max_iter=max_iter, tol=tol)

    results = dict(zip(tasks, _parallel_map(solve, tasks, threads)))

    unconverged = sum(1 for _, diag in results.values() if not diag.converged)
    max_residual = max(diag.residual for _, diag in results.values())

    worst = None
    for a_idx in range(anchors):
        for first in range(seeds):
            for second in range(first + 1, seeds):
                distance = trace_distance(results[(a_idx, first)][0],
                                          results[(a_idx, second)][0])
                if worst is None or distance > worst[3]:
                    worst = (a_idx, first, second, distance)

    def walk(a_idx):
        """ Largest transport mismatch along the orbit of anchor a_idx """
        point = env.copy_point(points[a_idx])
        previous = results[(a_idx, 0)][0]
        mismatch = 0.0
        for _ in range(orbit_length):
            point = env.step(point)
            pushed = channel_of(env.ensemble_at(point)).apply(previous)
            solved, _ = stationary_state(env, point, starts[0],
                                         max_iter=max_iter, tol=tol)
            mismatch = max(mismatch, trace_distance(pushed, solved))
            previous = solved
        return mismatch

    orbit_mismatch = max(_parallel_map(walk, range(anchors), threads)) \
        if orbit_length > 0 else 0.0

    pair_tol = PAIR_FACTOR * tol
    rows = [
        CheckRow('unconverged_solves', unconverged, 0, 0, unconverged == 0),
        CheckRow('max_residual', max_residual, 0.0, tol, max_residual < tol),
        CheckRow('max_pair_distance', worst[3], 0.0, pair_tol,
                 worst[3] <= pair_tol),
        CheckRow('orbit_transport', orbit_mismatch, 0.0, pair_tol,
                 orbit_mismatch <= pair_tol),
    ]

    unit_eigenvalues = None
    period = _period_channel(env)
    if period is not None:
        unit_eigenvalues = period.unit_eigenvalue_count()
        rows.append(CheckRow('unit_eigenvalues', unit_eigenvalues, 1, 0,
                             unit_eigenvalues == 1))

    passed = all(row.passed for row in rows)
    separating_pair = worst if worst[3] > pair_tol else None
    separating_states = None
    if separating_pair is not None:
        a_idx, first, second, _ = separating_pair
        separating_states = (results[(a_idx, first)][0],
                             results[(a_idx, second)][0])

    if passed:
        logging.info("Dyn-Erg certifier PASS (%d anchors x %d seeds)",
                     anchors, seeds)
    else:
        logging.error("Dyn-Erg certifier FAIL: %s", ', '.join(
            row.quantity for row in rows if not row.passed
        ))

    return DynErgReport(
        passed=passed,
        tol=tol,
        rows=rows,
        separating_pair=separating_pair,
        separating_states=separating_states,
        profiles=results,
        unit_eigenvalues=unit_eigenvalues,
    )


def _z_score(difference, stderr):
    if stderr > 0:
        return difference / stderr
    return 0.0 if abs(difference) <= 1e-12 else float('inf') * np.sign(
        difference)


class LLNReport(object):
    """ Outcome-frequency law of large numbers check for one pattern """
    def __init__(self, pattern, frequencies, stderr, target, target_stderr,
                 steps, threshold, seed, omega_mode, errors=0):
        self.pattern = tuple(pattern)
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.mean = float(np.mean(self.frequencies))
        self.stderr = stderr
        self.target = target
        self.target_stderr = target_stderr
        self.trajectories = len(self.frequencies)
        self.steps = steps
        self.threshold = threshold
        self.seed = seed
        self.omega_mode = omega_mode
        self.errors = errors
        self.z = _z_score(
            self.mean - target, float(np.hypot(stderr, target_stderr)),
        )
        self.passed = abs(self.z) <= threshold and errors == 0

    def __repr__(self):
        return repr_str(self, ('word', 'mean', 'target', 'z', 'passed'))

    @property
    def word(self):
        """ Pattern joined with dots """
        return '.'.join(self.pattern)

    def row(self):
        """ CSV row matching ``LLN_COLUMNS`` """
        return (self.word, self.trajectories, self.steps, self.mean,
                self.stderr, self.target, self.target_stderr, self.z,
                self.threshold, 'PASS' if self.passed else 'FAIL')


LLN_COLUMNS = ('pattern', 'trajectories', 'steps', 'mean', 'stderr',
               'target', 'target_stderr', 'z', 'threshold', 'verdict')


def lln_target(env, pattern, stationary=None, seed=0, threads=1,
               samples=TARGET_SAMPLES):
    """ E_P[Q_rho_inf] of the start-1 cylinder of ``pattern``: exact for
    finite environments, Monte Carlo over the torus

    :rtype: AnnealedEstimate
    """
    stationary = StationaryAssignment() if stationary is None else stationary
    integration = 'exact' if env.kind.finite else MonteCarlo(samples, seed)
    return annealed_cylinder(env, stationary, CylinderSet(pattern),
                             integration, threads=threads)


def require_dyn_erg(env, seed, threads=1):
    """ Quick two-anchor, two-seed certification

    :raises DynErgError: If it fails
    """
    report = dyn_erg_certify(env, anchors=2, seeds=2, master_seed=seed,
                             threads=threads)
    if not report.passed:
        raise DynErgError(
            "dynamical ergodicity not certified (%s); set override to "
            "proceed" % ', '.join(
                row.quantity for row in report.rows if not row.passed
            )
        )


def verify_lln_outcomes(env, pattern, trajectories, steps, seed,
                        assignment=None, omega_mode=None, threads=1,
                        override=False, threshold=Z_THRESHOLD, target=None):
    """ Compare sliding-window pattern frequencies of sampled trajectories
    with E_P[Q_rho_inf](pattern)

    The standard error is the spread of per-trajectory frequencies; for a
    fixed start point in a non-constant environment it is at least the
    batch-means error over ``BATCH_BLOCKS`` blocks of window starts, which
    carries the environment's finite-N fluctuation

    :param assignment: initial states, defaults to I/d everywhere
    :param omega_mode: defaults to ``ResampleOmega``
    :param bool override: skip the Dyn-Erg check and accept unconverged
      stationary states
    :param target: precomputed ``AnnealedEstimate``

    :raises DynErgError: If not overridden and certification fails
    :raises UnconvergedError: If not overridden and a stationary solve
      doesn't converge

    Examples:

      >>> from .environment import EnvSystem
      >>> from .families import identity_kraus
      >>> report = verify_lln_outcomes(
      ...     EnvSystem.constant(identity_kraus()), ['I', 'I'], 3, 10, seed=1,
      ...     override=True)
      >>> report.mean, round(report.target, 12), report.passed
      (1.0, 1.0, True)
    """
    pattern = [str(label) for label in pattern]
    assignment = FixedState(QuantumState.maximally_mixed(env.dim)) \
        if assignment is None else assignment
    omega_mode = ResampleOmega() if omega_mode is None else omega_mode

    if target is None:
        if not override:
            require_dyn_erg(env, seed, threads)
        target = lln_target(env, pattern, StationaryAssignment(
            override=override), seed, threads)

    batch = sample_batch(env, assignment, steps, trajectories, seed,
                         omega_mode, threads=threads)
    return lln_report(env, pattern, batch, target, steps,
                      omega_mode=omega_mode, threshold=threshold)


def lln_report(env, pattern, batch, target, steps, omega_mode=None,
               threshold=Z_THRESHOLD):
    """ ``LLNReport`` of ``pattern`` over an already sampled batch

    :param target: ``AnnealedEstimate`` of the pattern
    """
    pattern = [str(label) for label in pattern]
    omega_mode = ResampleOmega() if omega_mode is None else omega_mode
    records = batch.completed
    frequencies = np.array([record.pattern_frequency(pattern)
                            for record in records])
    stderr = 0.0
    if len(frequencies) > 1:
        stderr = float(np.std(frequencies, ddof=1) / np.sqrt(len(frequencies)))
    if isinstance(omega_mode, FixedOmega) and \
            env.kind is not EnvKind.constant:
        windows = steps - len(pattern) + 1
        blocks = min(BATCH_BLOCKS, windows)
        if blocks > 1:
            block_means = np.mean([
                record.block_frequencies(pattern, blocks)
                for record in records
            ], axis=0)
            stderr = max(stderr, float(
                np.std(block_means, ddof=1) / np.sqrt(blocks)
            ))

    report = LLNReport(
        pattern=pattern,
        frequencies=frequencies,
        stderr=stderr,
        target=target.value,
        target_stderr=target.stderr,
        steps=steps,
        threshold=threshold,
        seed=batch.master_seed,
        omega_mode=omega_mode.name,
        errors=len(batch.errors),
    )
    logging.info("LLN %s: mean %.6g target %.6g z %.3g (%s)", report.word,
                 report.mean, report.target, report.z,
                 'PASS' if report.passed else 'FAIL')
    return report


class AnnealedLLNTable(object):
    """ Exact Cesaro sequence of annealed probabilities of tau^-n(Gamma) """
    def __init__(self, terms, target, gap_tol):
        self.terms = np.asarray(terms, dtype=float)
        self.n = np.arange(1, len(self.terms) + 1)
        self.cesaro = np.cumsum(self.terms) / self.n
        self.target = target
        self.gaps = np.abs(self.cesaro - target)
        self.term_gaps = np.abs(self.terms - target)
        self.gap_tol = gap_tol
        self.checkpoints = doubling_checkpoints(len(self.terms))

    def __repr__(self):
        return repr_str(self, ('max_n', 'target', 'final_gap', 'passed'))

    @property
    def max_n(self):
        """ Largest n computed """
        return len(self.terms)

    @property
    def final_gap(self):
        """ Cesaro gap at the largest n """
        return float(self.gaps[-1])

    @property
    def passed(self):
        """ Whether the final gap is within ``gap_tol`` """
        return self.final_gap <= self.gap_tol

    def checkpoint_gaps(self):
        """ Cesaro gaps at the doubling checkpoints """
        return [float(self.gaps[n - 1]) for n in self.checkpoints]

    def rows(self):
        """ (n, term, cesaro, target, gap) per n """
        return [
            (int(n), float(term), float(avg), self.target, float(gap))
            for n, term, avg, gap in zip(self.n, self.terms, self.cesaro,
                                         self.gaps)
        ]


ANNEALED_LLN_COLUMNS = ('n', 'term', 'cesaro', 'target', 'gap')


def verify_annealed_lln(env, assignment, cylinder, env_event=None,
                        max_n=1000, target_assignment=None, gap_tol=1e-3):
    """ Annealed probabilities of tau^-n(F x E) for n = 1..max_n, their
    Cesaro averages and the target annealed probability of F x E under the
    stationary state

    With R_n[s] = E[1{x_n = s} Phi^(n)(theta)], the n-th term is
    sum over s in F of <R_n[s], Y[s]>, and R_n follows the joint transfer
    R_n[t] = sum_s P(s, t) phi_t(R_(n-1)[s])

    :raises QuadratureUnavailableError: For the torus

    Examples:

      >>> from .environment import EnvSystem
      >>> from .families import amplitude_damping_kraus
      >>> env = EnvSystem.constant(amplitude_damping_kraus(0.3))
      >>> table = verify_annealed_lln(
      ...     env, FixedState(QuantumState.pure(2, 1)), CylinderSet(['1']),
      ...     max_n=200)
      >>> table.gaps[199] < table.gaps[19]
      True
    """
    if not env.kind.finite:
        raise QuadratureUnavailableError()
    if max_n < 1:
        raise ValueError("max_n must be at least 1, got %s" % max_n)
    symbols = env.event_symbols(env_event)
    transfer, _, _ = _forward_transfer(env)
    expectation = future_expectation(env, cylinder)
    expectation_vecs = np.array([vec(mat) for mat in expectation])

    current = np.array([vec(mat) for mat in assignment.symbol_weights(env)])
    terms = []
    for _ in range(max_n):
        current = transfer(current)
        terms.append(float(sum(
            np.real(np.vdot(current[sym], expectation_vecs[sym]))
            for sym in symbols
        )))

    target_assignment = StationaryAssignment() \
        if target_assignment is None else target_assignment
    target = annealed_exact(env, target_assignment, cylinder, env_event)
    table = AnnealedLLNTable(terms, target, gap_tol)
    logging.info("Annealed LLN %s: target %.6g, gap %.3g at n=%d", cylinder,
                 target, table.final_gap, max_n)
    return table


def sigma_invariance_check(env, cylinder, stationary=None):
    """ |E_P[Q_rho_inf](sigma^-1 E) - E_P[Q_rho_inf](E)| for a finite
    environment
    """
    stationary = StationaryAssignment() if stationary is None else stationary
    return abs(
        annealed_exact(env, stationary, cylinder.shifted(1)) -
        annealed_exact(env, stationary, cylinder)
    )


class ObservableReport(object):
    """ Time average of <Phi^(n)(theta), O> against its stationary mean """
    def __init__(self, average, target, steps, tol):
        self.average = average
        self.target = target
        self.steps = steps
        self.tol = tol
        self.gap = abs(average - target)
        self.passed = self.gap <= tol

    def __repr__(self):
        return repr_str(self, ('average', 'target', 'gap', 'passed'))


def _observable_at(env, observable, point):
    if isinstance(observable, (list, tuple)):
        return np.asarray(observable[env.symbol(point)], dtype=complex)
    if callable(observable):
        return np.asarray(observable(point), dtype=complex)
    return np.asarray(observable, dtype=complex)


def verify_observable_average(env, point, state, observable, steps,
                              tol=1e-2, samples=TARGET_SAMPLES, seed=0):
    """ (1/N) sum_n <Phi^(n)_omega(theta), O_(theta^n omega)> against
    E_P[<rho_inf_omega, O_omega>]

    :param observable: a Hermitian matrix, one per symbol (finite kinds),
      or a function of the point

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import amplitude_damping_kraus
      >>> env = EnvSystem.constant(amplitude_damping_kraus(0.5))
      >>> report = verify_observable_average(
      ...     env, FinitePoint(0), QuantumState.pure(2, 1), np.diag([1, 0]),
      ...     steps=500)
      >>> round(report.target, 9), report.passed
      (1.0, True)
    """
    current = state.mat
    total = 0.0
    for _ in range(steps):
        point = env.step(point)
        current = channel_of(env.ensemble_at(point)).apply(current)
        total += float(np.real(hs_inner(
            current, _observable_at(env, observable, point),
        )))
    average = total / steps

    if env.kind.finite:
        weights = StationaryAssignment().symbol_weights(env)
        target = 0.0
        for sym in range(env.n_symbols):
            if isinstance(observable, (list, tuple)):
                obs = np.asarray(observable[sym], dtype=complex)
            elif callable(observable):
                raise ValueError("Finite environments take matrices or "
                                 "per-symbol lists, not functions")
            else:
                obs = np.asarray(observable, dtype=complex)
            target += float(np.real(hs_inner(weights[sym], obs)))
    else:
        stationary = StationaryAssignment()
        values = []
        for idx in range(samples):
            sample = env.sample_invariant(
                stream(seed, Purpose.integration, idx))
            values.append(float(np.real(hs_inner(
                stationary.state_at(env, sample).mat,
                _observable_at(env, observable, sample),
            ))))
        target = float(np.mean(values))
    return ObservableReport(average, target, steps, tol)


class Comparison(object):
    """ One z-test of a quenched ergodic report """
    def __init__(self, name, value, reference, z, passed):
        self.name = name
        self.value = value
        self.reference = reference
        self.z = z
        self.passed = passed

    def __repr__(self):
        return repr_str(self, ('name', 'z', 'passed'))

    def as_tuple(self, threshold):
        """ (comparison, value, reference, z, threshold, PASS/FAIL) """
        return (self.name, self.value, self.reference, self.z, threshold,
                'PASS' if self.passed else 'FAIL')


QUENCHED_COLUMNS = ('comparison', 'value', 'reference', 'z', 'threshold',
                    'verdict')


class QuenchedErgodicReport(object):
    """ Pattern frequencies at several fixed start points and initial
    states, compared pairwise and against the common target
    """
    def __init__(self, cells, comparisons, threshold, target):
        self.cells = cells
        self.comparisons = comparisons
        self.threshold = threshold
        self.target = target
        self.passed = all(comp.passed for comp in comparisons)

    def __repr__(self):
        return '<QuenchedErgodicReport: %d cells, %d comparisons, %s>' % (
            len(self.cells), len(self.comparisons),
            'PASS' if self.passed else 'FAIL',
        )


def verify_quenched_ergodic(env, pattern, omegas=3, states=None,
                            trajectories=200, steps=1000, master_seed=0,
                            threads=1, override=False):
    """ Frequencies of ``pattern`` must not depend on the start point or
    the initial state

    Runs ``verify_lln_outcomes`` at ``omegas`` fixed invariant draws times
    each initial state; every pair of cell means and every cell against
    the target is z-tested at the Bonferroni-corrected 3 sigma level

    :param states: initial states, defaults to |0><0| and I/d

    :raises DynErgError: If not overridden and certification fails
    """
    states = [QuantumState.pure(env.dim, 0),
              QuantumState.maximally_mixed(env.dim)] \
        if states is None else list(states)
    if not override:
        require_dyn_erg(env, master_seed, threads)
    target = lln_target(env, pattern, StationaryAssignment(override=override),
                        master_seed, threads)

    cells = []
    for o_idx in range(omegas):
        point = env.sample_invariant(stream(master_seed, Purpose.omega, o_idx))
        for s_idx, state in enumerate(states):
            report = verify_lln_outcomes(
                env, pattern, trajectories, steps,
                derive_seed(master_seed, Purpose.omega, o_idx, s_idx),
                assignment=FixedState(state),
                omega_mode=FixedOmega(point),
                threads=threads,
                override=True,
                target=target,
            )
            cells.append(('omega%d/state%d' % (o_idx, s_idx), report))

    raw = []
    for first in range(len(cells)):
        name, report = cells[first]
        raw.append(('%s~target' % name, report.mean, target.value, _z_score(
            report.mean - target.value,
            float(np.hypot(report.stderr, target.stderr)),
        )))
        for second in range(first + 1, len(cells)):
            other_name, other = cells[second]
            stderr = float(np.hypot(report.stderr, other.stderr))
            raw.append(('%s~%s' % (name, other_name), report.mean, other.mean,
                        _z_score(report.mean - other.mean, stderr)))

    threshold = bonferroni_z(len(raw))
    comparisons = [
        Comparison(name, value, reference, z, abs(z) <= threshold)
        for name, value, reference, z in raw
    ]
    report = QuenchedErgodicReport(cells, comparisons, threshold, target)
    if report.passed:
        logging.info("Quenched ergodic check PASS over %d cells", len(cells))
    else:
        logging.error("Quenched ergodic check FAIL: %s", ', '.join(
            comp.name for comp in comparisons if not comp.passed
        ))
    return report
