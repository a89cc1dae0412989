""" Experiment orchestration: one runner per experiment kind, each writing
CSV artifacts into the output directory plus a shared ``manifest.json``
"""
import itertools
import logging
import os
import time

import numpy as np

from .assignments import FixedState
from .channels import KRAUS_TOL, kraus_validate
from .config import parse_state
from .environment import (
    TORUS_VALIDATION_POINTS,
    FinitePoint,
    SequencePoint,
    TorusPoint,
)
from .ergodics import (
    ANNEALED_LLN_COLUMNS,
    LLN_COLUMNS,
    QUENCHED_COLUMNS,
    StationaryAssignment,
    dyn_erg_certify,
    lln_report,
    require_dyn_erg,
    sigma_invariance_check,
    stationary_profile,
    verify_annealed_lln,
    verify_quenched_ergodic,
)
from .exceptions import DqtrajError
from .measures import (
    CylinderSet,
    MonteCarlo,
    annealed_cylinder,
    matrix_measure_cylinder,
    shift_identity_check,
)
from .matrixcore import trace_norm
from .output import (
    STATUS_ERROR,
    STATUS_FAIL,
    STATUS_PASS,
    RunManifest,
    write_plot,
    write_rows,
)
from .rng import Purpose, stream
from .trajectory import (
    FixedOmega,
    ResampleOmega,
    sample_batch,
    write_trajectories_csv,
    write_trajectories_npz,
)


NORMALIZATION_TOL = 1e-10
NORMALIZATION_MAX_WORDS = 4096
SHIFT_TOL = 1e-10
SIGMA_TOL = 1e-8

CHECK_COLUMNS = ('quantity', 'value', 'target', 'tolerance', 'verdict')

RUNNERS = {}


def experiment(name):
    """ Decorator registering an experiment runner under ``name``

    A runner takes a ``RunContext`` and returns ``STATUS_PASS`` or
    ``STATUS_FAIL``
    """
    def decorator(func):
        RUNNERS[name] = func
        return func
    return decorator


def verdict(passed):
    """ PASS/FAIL text """
    return STATUS_PASS if passed else STATUS_FAIL


def point_label(point):
    """ Stable text for an environment point

    Examples:

      >>> point_label(FinitePoint(1))
      '1'
      >>> point_label(TorusPoint(0.25))
      '0.25'
    """
    if isinstance(point, FinitePoint):
        return str(point.index)
    if isinstance(point, TorusPoint):
        return '%.17g' % point.coord
    if isinstance(point, SequencePoint):
        return 'x0=%d' % point.symbol
    return str(point)


class RunContext(object):
    """ Everything a runner needs: config, effective seed, threads and the
    output directory, plus the artifacts written so far
    """
    def __init__(self, config, seed, threads, out_dir):
        self.config = config
        self.env = config.env
        self.seed = seed
        self.threads = threads
        self.out_dir = out_dir
        self.config_hash = config.config_hash()
        self.artifacts = []

    def param(self, name):
        """ Experiment parameter from the config """
        return self.config.param(name)

    @property
    def metadata(self):
        """ Metadata line contents for every CSV of the run """
        return {'config_hash': self.config_hash, 'seed': self.seed}

    def path(self, name):
        """ Path of artifact ``name`` in the output directory """
        return os.path.join(self.out_dir, name)

    def write_rows(self, name, columns, rows):
        """ Write a CSV artifact and record it """
        write_rows(self.path(name), columns, rows, self.metadata)
        self.artifacts.append(name)

    def write_plot(self, name, series):
        """ Write long-format plot data and record it """
        write_plot(self.path(name), series, self.metadata)
        self.artifacts.append(name)

    def start_point(self, index=0):
        """ Configured ``omega``, else an invariant draw """
        omega = self.param('omega')
        if omega is not None:
            return self.env.point(omega)
        return self.env.sample_invariant(
            stream(self.seed, Purpose.anchor, index)
        )

    def omega_mode(self):
        """ ``FixedOmega`` at ``start_point`` or ``ResampleOmega`` """
        if self.param('omega_mode') == 'fixed':
            return FixedOmega(self.start_point())
        return ResampleOmega()

    def patterns(self):
        """ Configured patterns, else every single letter """
        patterns = self.param('patterns')
        if patterns is None:
            return [[label] for label in self.env.alphabet]
        return patterns

    def states(self):
        """ Configured initial states for ergodic checks, or None """
        specs = self.param('states')
        if specs is None:
            return None
        return [parse_state(spec, self.env.dim, 'params.states[%d]' % idx)
                for idx, spec in enumerate(specs)]

    def integration(self):
        """ ``'exact'`` or a ``MonteCarlo`` from the params """
        if self.param('integration') == 'mc' or not self.env.kind.finite:
            return MonteCarlo(self.param('samples'), self.seed)
        return 'exact'


@experiment('validate')
def run_validate(ctx):
    """ Kraus condition of every fiber, and normalization of the matrix
    valued measure over all words of length 1..max_length at one start
    point. Lengths with more than NORMALIZATION_MAX_WORDS words are skipped
    """
    env = ctx.env
    rows = []
    if env.kind.finite:
        for idx, fiber in enumerate(env.fibers):
            report = kraus_validate(fiber)
            rows.append(('fiber%d_residual' % idx, report.residual, 0.0,
                         KRAUS_TOL, verdict(report.passed)))
    else:
        coords = np.linspace(0, 1, TORUS_VALIDATION_POINTS, endpoint=False)
        residual = max(kraus_validate(env.family(coord)).residual
                       for coord in coords)
        rows.append(('family_residual', residual, 0.0, KRAUS_TOL,
                     verdict(residual <= KRAUS_TOL)))

    point = ctx.start_point()
    identity = np.eye(env.dim)
    max_length = ctx.param('max_length')
    for length in range(1, max_length + 1):
        if len(env.alphabet) ** length > NORMALIZATION_MAX_WORDS:
            logging.info("Normalization checked up to length %d of %d: "
                         "%d words over budget", length - 1, max_length,
                         len(env.alphabet) ** length)
            break
        total = np.zeros((env.dim, env.dim), dtype=complex)
        for word in itertools.product(env.alphabet, repeat=length):
            total += matrix_measure_cylinder(env, point, list(word)).mat
        deviation = trace_norm(total - identity)
        rows.append(('normalization_n%d' % length, deviation, 0.0,
                     NORMALIZATION_TOL,
                     verdict(deviation <= NORMALIZATION_TOL)))

    ctx.write_rows('validate.csv', CHECK_COLUMNS, rows)
    return verdict(all(row[-1] == STATUS_PASS for row in rows))


@experiment('simulate')
def run_simulate(ctx):
    """ Sample trajectories and dump them """
    env = ctx.env
    omega_mode = ctx.omega_mode()
    batch = sample_batch(
        env, FixedState(ctx.config.initial_state), ctx.param('steps'),
        ctx.param('trajectories'), ctx.seed, omega_mode,
        threads=ctx.threads, keep_states=ctx.param('keep_states'),
    )
    metadata = dict(ctx.metadata)
    metadata.update({
        'd': env.dim,
        'alphabet_size': len(env.alphabet),
        'env_kind': env.kind.value,
    })
    with open(ctx.path('trajectories.csv'), 'w') as handle:
        write_trajectories_csv(batch, handle, metadata)
    ctx.artifacts.append('trajectories.csv')
    logging.info("Wrote %s", ctx.path('trajectories.csv'))
    if ctx.param('npz'):
        write_trajectories_npz(batch, ctx.path('trajectories.npz'))
        ctx.artifacts.append('trajectories.npz')
    return verdict(not batch.errors)


@experiment('stationary')
def run_stationary(ctx):
    """ Stationary states at the anchors, their convergence history """
    env = ctx.env
    profile = stationary_profile(
        env, ctx.param('anchors'), ctx.config.initial_state,
        max_iter=ctx.param('max_iter'), tol=ctx.param('tol'),
        master_seed=ctx.seed, threads=ctx.threads,
    )
    rows = []
    entries = []
    series = {}
    for idx, (anchor, state, diag) in enumerate(zip(
            profile.anchors, profile.states, profile.diagnostics)):
        rows.append((idx, point_label(anchor), diag.iterations,
                     diag.increment, diag.residual, diag.tol,
                     verdict(diag.converged)))
        for row, col in itertools.product(range(env.dim), repeat=2):
            entries.append((idx, row, col, float(state.mat[row, col].real),
                            float(state.mat[row, col].imag)))
        series['anchor%d_increment' % idx] = [
            (step, increment) for step, increment, _ in diag.history
            if np.isfinite(increment)
        ]
        series['anchor%d_residual' % idx] = [
            (step, residual) for step, _, residual in diag.history
        ]

    ctx.write_rows('stationary.csv', (
        'anchor', 'point', 'iterations', 'increment', 'residual', 'tol',
        'verdict',
    ), rows)
    ctx.write_rows('stationary_states.csv',
                   ('anchor', 'row', 'col', 'real', 'imag'), entries)
    ctx.write_plot('stationary_plot.csv', series)
    return verdict(profile.converged)


@experiment('certify')
def run_certify(ctx):
    """ Dyn-Erg certification report """
    report = dyn_erg_certify(
        ctx.env, anchors=ctx.param('anchors'), seeds=ctx.param('seeds'),
        max_iter=ctx.param('max_iter'), tol=ctx.param('tol'),
        master_seed=ctx.seed, threads=ctx.threads,
    )
    ctx.write_rows('certify.csv', CHECK_COLUMNS,
                   [row.as_tuple() for row in report.rows])
    if report.separating_pair is not None:
        anchor, first, second, distance = report.separating_pair
        logging.error("Anchor %d: seeds %d and %d reach limits %.6g apart",
                      anchor, first, second, distance)
    return verdict(report.passed)


@experiment('lln')
def run_lln(ctx):
    """ Outcome-frequency law of large numbers for each pattern over one
    batch of trajectories
    """
    env = ctx.env
    override = ctx.param('override')
    if not override:
        require_dyn_erg(env, ctx.seed, ctx.threads)
    omega_mode = ctx.omega_mode()
    stationary = StationaryAssignment(override=override)
    batch = sample_batch(
        env, FixedState(ctx.config.initial_state), ctx.param('steps'),
        ctx.param('trajectories'), ctx.seed, omega_mode, threads=ctx.threads,
    )
    reports = []
    for pattern in ctx.patterns():
        target = annealed_cylinder(env, stationary, CylinderSet(pattern),
                                   ctx.integration(), threads=ctx.threads)
        reports.append(lln_report(
            env, pattern, batch, target, ctx.param('steps'),
            omega_mode=omega_mode, threshold=ctx.param('z_threshold'),
        ))
    ctx.write_rows('lln.csv', LLN_COLUMNS,
                   [report.row() for report in reports])
    return verdict(all(report.passed for report in reports))


def _cylinder(ctx):
    spec = ctx.param('cylinder')
    if spec is None:
        return CylinderSet([ctx.env.alphabet[0]])
    return CylinderSet(spec['word'], spec['start'])


@experiment('annealed-lln')
def run_annealed_lln(ctx):
    """ Exact Cesaro table of annealed probabilities of tau^-n(F x E) """
    env = ctx.env
    cylinder = _cylinder(ctx)
    table = verify_annealed_lln(
        env, FixedState(ctx.config.initial_state), cylinder,
        env_event=ctx.param('env_event'), max_n=ctx.param('max_n'),
        gap_tol=ctx.param('gap_tol'),
    )
    ctx.write_rows('annealed_lln.csv', ANNEALED_LLN_COLUMNS, table.rows())
    ctx.write_plot('annealed_lln_plot.csv', {
        'cesaro_gap': [(n, float(table.gaps[n - 1]))
                       for n in table.checkpoints],
        'term_gap': [(n, float(table.term_gaps[n - 1]))
                     for n in table.checkpoints],
    })
    return verdict(table.passed)


@experiment('quenched-erg')
def run_quenched_erg(ctx):
    """ Frequencies at fixed start points and initial states, compared
    pairwise and with the target
    """
    rows = []
    passed = True
    for pattern in ctx.patterns():
        report = verify_quenched_ergodic(
            ctx.env, pattern, omegas=ctx.param('omegas'),
            states=ctx.states(), trajectories=ctx.param('trajectories'),
            steps=ctx.param('steps'), master_seed=ctx.seed,
            threads=ctx.threads, override=ctx.param('override'),
        )
        word = '.'.join(pattern)
        rows.extend(
            ('%s:%s' % (word, comp.name),) +
            comp.as_tuple(report.threshold)[1:]
            for comp in report.comparisons
        )
        passed = passed and report.passed
    ctx.write_rows('quenched_erg.csv', QUENCHED_COLUMNS, rows)
    return verdict(passed)


@experiment('shift-check')
def run_shift_check(ctx):
    """ Shift identity at random start points and words, plus sigma
    invariance of the stationary annealed measure for finite kinds
    """
    env = ctx.env
    shift = ctx.param('shift')
    rows = []
    for idx in range(ctx.param('instances')):
        rng = stream(ctx.seed, Purpose.instance, idx)
        point = env.sample_invariant(rng)
        length = int(rng.integers(1, 4))
        word = [env.alphabet[sym]
                for sym in rng.integers(0, len(env.alphabet), size=length)]
        residual = shift_identity_check(env, point, shift, word)
        rows.append(('shift_identity', '.'.join(word), shift, residual,
                     SHIFT_TOL, verdict(residual <= SHIFT_TOL)))

    if env.kind.finite:
        stationary = StationaryAssignment(override=ctx.param('override'))
        cylinder = _cylinder(ctx)
        residual = sigma_invariance_check(env, cylinder, stationary)
        rows.append(('sigma_invariance', '.'.join(cylinder.word), 1, residual,
                     SIGMA_TOL, verdict(residual <= SIGMA_TOL)))

    ctx.write_rows('shift_check.csv', (
        'check', 'word', 'shift', 'residual', 'tolerance', 'verdict',
    ), rows)
    return verdict(all(row[-1] == STATUS_PASS for row in rows))


def run(config, experiment_name=None, seed=None, out=None, threads=None):
    """ Run an experiment and write its artifacts and manifest

    :param ExperimentConfig config: validated config
    :param str experiment_name: overrides ``config.experiment``
    :param int seed: overrides ``config.seed``
    :param str out: overrides ``config.output``
    :param int threads: overrides ``config.threads``

    :returns: (status, artifact paths); status is PASS or FAIL

    :raises DqtrajError: Module errors, after the manifest records ERROR
    """
    name = experiment_name or config.experiment
    if name not in RUNNERS:
        raise ValueError("Unknown experiment %r; must be one of %s" % (
            name, ', '.join(sorted(RUNNERS)),
        ))
    seed = config.seed if seed is None else seed
    out_dir = config.output if out is None else out
    threads = config.threads if threads is None else threads
    os.makedirs(out_dir, exist_ok=True)

    ctx = RunContext(config, seed, threads, out_dir)
    manifest = RunManifest(name, ctx.config_hash, seed, threads=threads,
                           seeds={'master': seed})
    logging.info("Running %s (seed %d, %d threads) into %s", name, seed,
                 threads, out_dir)
    started = time.perf_counter()
    status = STATUS_ERROR
    try:
        status = RUNNERS[name](ctx)
    except DqtrajError as ex:
        logging.error("Experiment %s aborted: %s", name, ex)
        raise
    finally:
        manifest.status = status
        manifest.wall_time = time.perf_counter() - started
        manifest.artifacts = list(ctx.artifacts)
        manifest.write(out_dir)

    if status == STATUS_PASS:
        logging.info("Experiment %s: %s in %.2fs", name, status,
                     manifest.wall_time)
    else:
        logging.error("Experiment %s: %s", name, status)
    return status, [os.path.join(out_dir, artifact)
                    for artifact in ctx.artifacts + ['manifest.json']]


EXPERIMENT_NAMES = tuple(sorted(RUNNERS))
