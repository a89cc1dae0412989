""" YAML experiment configs

Everything wrong with a config file is collected before anything is raised,
so a single ``ConfigError`` lists every problem.
"""
import copy
import hashlib
import json
import os

import numpy as np
import yaml

from .channels import KrausSet
from .environment import GOLDEN_ALPHA, EnvKind, EnvSystem
from .exceptions import ConfigError, DqtrajError
from .families import ParametricFamily, kraus_family, rotation_unitary
from .matrixcore import MAX_DIM, QuantumState
from .util import parse_seed, repr_str


EXPERIMENTS = (
    'validate',
    'simulate',
    'stationary',
    'certify',
    'lln',
    'annealed-lln',
    'quenched-erg',
    'shift-check',
)

PARAM_DEFAULTS = {
    'steps': 1000,
    'trajectories': 200,
    'patterns': None,
    'omega_mode': 'resample',
    'omega': None,
    'anchors': 4,
    'seeds': 4,
    'max_iter': 2 ** 16,
    'tol': None,
    'cylinder': None,
    'env_event': None,
    'integration': 'exact',
    'samples': 256,
    'omegas': 3,
    'states': None,
    'shift': 2,
    'instances': 4,
    'max_n': 1000,
    'gap_tol': 1e-3,
    'keep_states': False,
    'override': False,
    'z_threshold': 3.0,
    'npz': False,
    'max_length': 8,
}

INT_PARAMS = ('steps', 'trajectories', 'anchors', 'seeds', 'max_iter',
              'samples', 'omegas', 'shift', 'instances', 'max_n',
              'max_length')
FLOAT_PARAMS = ('tol', 'gap_tol', 'z_threshold')
BOOL_PARAMS = ('keep_states', 'override', 'npz')

# Keys that don't change results; left out of the config hash
UNHASHED_KEYS = ('threads', 'output')


class ExperimentConfig(object):
    """ Validated experiment config """
    def __init__(self, raw, env, initial_state, experiment, seed, threads,
                 output, params, path=None):
        self.raw = raw
        self.env = env
        self.initial_state = initial_state
        self.experiment = experiment
        self.seed = seed
        self.threads = threads
        self.output = output
        self.params = params
        self.path = path

    def __repr__(self):
        return repr_str(self, ('experiment', 'seed', 'threads', 'path'))

    @property
    def dim(self):
        """ Hilbert space dimension """
        return self.env.dim

    def config_hash(self):
        """ sha256 of the canonical JSON of the config, without the keys
        that don't affect results

        Examples:

          >>> one = load_config({'dimension': 2, 'environment': {
          ...     'kind': 'constant', 'fiber': {'family': 'identity'}},
          ...     'threads': 1})
          >>> two = load_config({'dimension': 2, 'environment': {
          ...     'kind': 'constant', 'fiber': {'family': 'identity'}},
          ...     'threads': 8})
          >>> one.config_hash() == two.config_hash()
          True
        """
        hashed = {
            key: value for key, value in self.raw.items()
            if key not in UNHASHED_KEYS
        }
        canonical = json.dumps(hashed, sort_keys=True, default=str,
                               separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def param(self, name):
        """ Experiment parameter, falling back to its default """
        return self.params.get(name, PARAM_DEFAULTS[name])


def _read_matrix(spec, base_dir, where, errors):
    """ Matrix from ``[[...]]``, ``{real, imag}`` or ``{file}`` """
    try:
        if isinstance(spec, dict):
            if 'file' in spec:
                return np.load(os.path.join(base_dir, spec['file']))
            real = np.asarray(spec.get('real', 0), dtype=float)
            imag = np.asarray(spec.get('imag', np.zeros_like(real)),
                              dtype=float)
            return real + 1j * imag
        return np.asarray(spec, dtype=complex)
    except (OSError, ValueError, TypeError) as ex:
        errors.append('%s: unreadable matrix (%s)' % (where, ex))
        return None


def _parse_fiber(spec, base_dir, where, errors):
    if not isinstance(spec, dict):
        errors.append('%s: must be a mapping' % where)
        return None
    spec = dict(spec)
    try:
        if 'ops' in spec:
            ops = spec['ops']
            if not isinstance(ops, dict) or not ops:
                errors.append('%s.ops: must be a non-empty mapping' % where)
                return None
            mats = {}
            for label, mat_spec in ops.items():
                mat = _read_matrix(mat_spec, base_dir,
                                   '%s.ops.%s' % (where, label), errors)
                if mat is None:
                    return None
                mats[str(label)] = mat
            kraus = KrausSet(mats, name=spec.get('name', where))
            if 'rotate' in spec:
                kraus = kraus_family_rotate(kraus, spec['rotate'])
            return kraus
        if 'family' not in spec:
            errors.append('%s: must give family or ops' % where)
            return None
        return kraus_family(spec.pop('family'), **spec)
    except (DqtrajError, ValueError, TypeError) as ex:
        errors.append('%s: %s' % (where, ex))
        return None


def kraus_family_rotate(kraus, rotate):
    """ Pre-multiply explicit operators by a config ``rotate`` block """
    axis = rotate.get('axis', 'z')
    unitary = rotation_unitary(kraus.dim, axis, float(rotate.get('angle', 0)))
    return kraus.premultiply(unitary, name='%s@%s' % (kraus.name, axis))


def _parse_environment(spec, base_dir, errors):
    if not isinstance(spec, dict):
        errors.append('environment: must be a mapping')
        return None
    try:
        kind = EnvKind(spec.get('kind'))
    except ValueError:
        errors.append('environment.kind: must be one of %s, got %r' % (
            ', '.join(member.value for member in EnvKind), spec.get('kind'),
        ))
        return None

    if kind is EnvKind.quasiperiodic:
        if 'family' not in spec:
            errors.append('environment.family: required for quasiperiodic')
            return None
        try:
            alpha = float(spec.get('alpha', GOLDEN_ALPHA))
            family = ParametricFamily(spec['family'],
                                      **dict(spec.get('params') or {}))
            return EnvSystem.quasiperiodic(family, alpha)
        except (DqtrajError, ValueError, TypeError) as ex:
            errors.append('environment: %s' % ex)
            return None

    if kind is EnvKind.constant and 'fiber' in spec:
        fiber_specs = [spec['fiber']]
    else:
        fiber_specs = spec.get('fibers')
    if not isinstance(fiber_specs, list) or not fiber_specs:
        errors.append('environment.fibers: must be a non-empty list')
        return None
    fibers = [
        _parse_fiber(fiber, base_dir, 'environment.fibers[%d]' % idx, errors)
        for idx, fiber in enumerate(fiber_specs)
    ]
    if any(fiber is None for fiber in fibers):
        return None

    try:
        if kind is EnvKind.constant:
            if len(fibers) != 1:
                errors.append('environment.fibers: constant takes one fiber')
                return None
            return EnvSystem.constant(fibers[0])
        if kind is EnvKind.periodic:
            return EnvSystem.periodic(fibers)
        if kind is EnvKind.iid:
            if 'weights' not in spec:
                errors.append('environment.weights: required for iid')
                return None
            return EnvSystem.iid(fibers, spec['weights'])
        if 'transition' not in spec:
            errors.append('environment.transition: required for markov')
            return None
        return EnvSystem.markov(fibers, spec['transition'],
                                spec.get('stationary'))
    except (DqtrajError, ValueError, TypeError) as ex:
        errors.append('environment: %s' % ex)
        return None


def parse_state(spec, dim, where='initial_state'):
    """ State from ``{kind: maximally_mixed | pure | matrix}``

    :raises ConfigError: If the state description is bad

    Examples:

      >>> parse_state({'kind': 'pure', 'index': 1}, 2).mat.real.tolist()
      [[0.0, 0.0], [0.0, 1.0]]
      >>> parse_state(None, 2).purity
      0.5
    """
    if spec is None:
        return QuantumState.maximally_mixed(dim)
    if not isinstance(spec, dict):
        raise ConfigError('%s: must be a mapping' % where)
    kind = spec.get('kind', 'maximally_mixed')
    try:
        if kind == 'maximally_mixed':
            return QuantumState.maximally_mixed(dim)
        if kind == 'pure':
            return QuantumState.pure(dim, int(spec.get('index', 0)))
        if kind == 'matrix':
            errors = []
            mat = _read_matrix(spec, '.', where, errors)
            if errors:
                raise ConfigError(errors)
            return QuantumState(mat)
    except (DqtrajError, ValueError, IndexError) as ex:
        if isinstance(ex, ConfigError):
            raise
        raise ConfigError('%s: %s' % (where, ex))
    raise ConfigError('%s.kind: must be maximally_mixed, pure or matrix, '
                      'got %r' % (where, kind))


def _parse_params(spec, errors):
    if spec is None:
        return {}
    if not isinstance(spec, dict):
        errors.append('params: must be a mapping')
        return {}
    params = {}
    for key, value in spec.items():
        if key not in PARAM_DEFAULTS:
            errors.append('params.%s: unknown parameter' % key)
            continue
        if value is None:
            continue
        try:
            if key in INT_PARAMS:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError('must be an integer')
                value = int(value)
                if value < 1:
                    raise ValueError('must be at least 1')
            elif key in FLOAT_PARAMS:
                value = float(value)
                if value <= 0:
                    raise ValueError('must be positive')
            elif key in BOOL_PARAMS:
                if not isinstance(value, bool):
                    raise ValueError('must be true or false')
            elif key == 'omega_mode' and value not in ('fixed', 'resample'):
                raise ValueError('must be fixed or resample')
            elif key == 'integration' and value not in ('exact', 'mc'):
                raise ValueError('must be exact or mc')
            elif key == 'patterns':
                if not isinstance(value, list) or not value:
                    raise ValueError('must be a non-empty list of words')
                value = [_word(word) for word in value]
                if not all(value):
                    raise ValueError('words must have at least one label')
            elif key == 'cylinder':
                if not isinstance(value, dict) or 'word' not in value:
                    raise ValueError('must be a mapping with a word')
                value = {'start': int(value.get('start', 1)),
                         'word': _word(value['word'])}
                if value['start'] < 1:
                    raise ValueError('start must be at least 1, got %d' %
                                     value['start'])
                if not value['word']:
                    raise ValueError('word must have at least one label')
        except (ValueError, TypeError) as ex:
            errors.append('params.%s: %s' % (key, ex))
            continue
        params[key] = value
    return params


def _check_params(params, env, dim, errors):
    """ Checks of ``params`` that need the environment: labels, pattern
    lengths, start points, environment events and states
    """
    alphabet = set(env.alphabet)
    steps = params.get('steps', PARAM_DEFAULTS['steps'])
    patterns = [('params.patterns[%d]' % idx, word)
                for idx, word in enumerate(params.get('patterns') or [])]
    for where, word in patterns:
        if len(word) > steps:
            errors.append('%s: %d labels but only %d steps' % (
                where, len(word), steps,
            ))
    words = list(patterns)
    if 'cylinder' in params:
        words.append(('params.cylinder.word', params['cylinder']['word']))
    for where, word in words:
        unknown = [label for label in word if label not in alphabet]
        if unknown:
            errors.append('%s: labels %s not in the alphabet (%s)' % (
                where, ', '.join(unknown), ', '.join(env.alphabet),
            ))

    if 'omega' in params:
        try:
            env.point(params['omega'])
        except (DqtrajError, ValueError, TypeError) as ex:
            errors.append('params.omega: %s' % ex)

    if 'env_event' in params:
        event = params['env_event']
        try:
            if env.kind is EnvKind.quasiperiodic:
                low, high = (float(bound) for bound in event)
                if not 0 <= low < high <= 1:
                    raise ValueError('interval must satisfy 0 <= low < high '
                                     '<= 1, got [%s, %s)' % (low, high))
            else:
                env.event_symbols(event)
        except (DqtrajError, ValueError, TypeError) as ex:
            errors.append('params.env_event: %s' % ex)

    if 'states' in params and dim is not None:
        states = params['states']
        if not isinstance(states, list) or not states:
            errors.append('params.states: must be a non-empty list of states')
            return
        for idx, spec in enumerate(states):
            try:
                parse_state(spec, dim, 'params.states[%d]' % idx)
            except ConfigError as ex:
                errors.extend(ex.errors)


def _word(value):
    """ Word from a list of labels or a dotted string

    Examples:

      >>> _word('X.Z')
      ['X', 'Z']
      >>> _word([0, 1])
      ['0', '1']
    """
    if isinstance(value, str):
        return value.split('.') if value else []
    return [str(label) for label in value]


def load_config(source, base_dir=None):
    """ Load and validate a config

    :param source: path to a YAML file, or an already parsed mapping
    :param str base_dir: directory ``file`` matrix paths are relative to;
      defaults to the config file's directory

    :raises ConfigError: Listing every validation error

    Examples:

      >>> config = load_config({
      ...     'dimension': 2,
      ...     'environment': {'kind': 'markov', 'fibers': [
      ...         {'family': 'depolarizing', 'p': 0.4},
      ...         {'family': 'depolarizing', 'p': 0.2}],
      ...         'transition': [[0.7, 0.3], [0.45, 0.55]]},
      ...     'experiment': 'lln', 'seed': 7})
      >>> config.env
      <EnvSystem: kind=markov, dim=2, symbols=2>
      >>> config.param('steps')
      1000

      >>> load_config({'dimension': 0, 'experiment': 'nope'})
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.ConfigError: [config] 3 validation errors:
        dimension: must be an integer in [1, 32], got 0
        experiment: must be one of validate, simulate, stationary, certify, lln, annealed-lln, quenched-erg, shift-check, got 'nope'
        environment: required
    """
    path = None
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
        base_dir = base_dir or '.'
    else:
        path = source
        try:
            with open(path) as handle:
                raw = yaml.safe_load(handle)
        except OSError as ex:
            raise ConfigError('%s: %s' % (path, ex))
        except yaml.YAMLError as ex:
            raise ConfigError('%s: invalid YAML (%s)' % (path, ex))
        base_dir = base_dir or os.path.dirname(os.path.abspath(path))
    if not isinstance(raw, dict):
        raise ConfigError('config must be a mapping')

    errors = []
    dim = raw.get('dimension')
    if isinstance(dim, bool) or not isinstance(dim, int) or \
            not 1 <= dim <= MAX_DIM:
        errors.append('dimension: must be an integer in [1, %d], got %r' % (
            MAX_DIM, dim,
        ))
        dim = None

    experiment = raw.get('experiment', 'validate')
    if experiment not in EXPERIMENTS:
        errors.append('experiment: must be one of %s, got %r' % (
            ', '.join(EXPERIMENTS), experiment,
        ))

    seed = raw.get('seed', 0)
    try:
        seed = parse_seed(seed)
    except (ValueError, TypeError) as ex:
        errors.append('seed: %s' % ex)

    threads = raw.get('threads', 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or \
            threads < 1:
        errors.append('threads: must be a positive integer, got %r' % (
            threads,
        ))

    output = raw.get('output', 'out')
    if not isinstance(output, str):
        errors.append('output: must be a path, got %r' % (output,))

    params = _parse_params(raw.get('params'), errors)

    env = None
    if 'environment' not in raw:
        errors.append('environment: required')
    else:
        env = _parse_environment(raw['environment'], base_dir, errors)

    if env is not None and dim is not None and env.dim != dim:
        errors.append('dimension: %d but the environment acts on %d' % (
            dim, env.dim,
        ))
    if env is not None and 'alphabet' in raw:
        alphabet = tuple(str(label) for label in raw['alphabet'])
        if alphabet != env.alphabet:
            errors.append('alphabet: (%s) but the environment has (%s)' % (
                ', '.join(alphabet), ', '.join(env.alphabet),
            ))
    if env is not None:
        _check_params(params, env, dim, errors)

    initial_state = None
    if dim is not None:
        try:
            initial_state = parse_state(raw.get('initial_state'), dim)
        except ConfigError as ex:
            errors.extend(ex.errors)

    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        raw=raw,
        env=env,
        initial_state=initial_state,
        experiment=experiment,
        seed=seed,
        threads=threads,
        output=output,
        params=params,
        path=path,
    )
