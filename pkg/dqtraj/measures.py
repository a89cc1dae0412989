""" Quenched, matrix-valued and annealed quantum measures of cylinder sets

A cylinder with start n and word (b_1..b_m) is the event that outcomes
n..n+m-1 spell the word. Its matrix-valued measure at omega is the nested
adjoint image

    Q*_omega = F_1 o ... o F_(n+m-1) (I)

where F_k is the adjoint channel of the fiber at theta^k(omega) for the
free positions k < n, and the adjoint single-outcome map T_b^dagger for the
word positions. Pairing with a state gives the quenched probability.
"""
import itertools
import logging

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channels import word_operator
from .exceptions import (
    EnumerationBudgetError,
    InvalidPatternError,
    InvalidStateError,
    QuadratureUnavailableError,
)
from .matrixcore import dagger, hs_inner, trace_norm
from .rng import Purpose, stream
from .util import repr_str


SHIFT_MAX_N = 12
ENUMERATION_BUDGET = 2 ** 16
MEASURE_TOL = 1e-9


class CylinderSet(object):
    """ Outcome event A_start(b_1, ..., b_m) """
    def __init__(self, word, start=1):
        """
        :raises InvalidPatternError: If ``start`` < 1 or the word is empty

        Examples:

          >>> CylinderSet(['X', 'Z'], start=3)
          <CylinderSet: start=3, word=X.Z>
          >>> CylinderSet([])
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.InvalidPatternError: [measures] cylinder word must have at least one label
        """
        self.word = tuple(str(label) for label in word)
        self.start = int(start)
        if not self.word:
            raise InvalidPatternError(
                "cylinder word must have at least one label"
            )
        if self.start < 1:
            raise InvalidPatternError(
                "cylinder start must be >= 1, got %s" % start
            )

    def __repr__(self):
        return '<CylinderSet: start=%d, word=%s>' % (
            self.start, '.'.join(self.word),
        )

    def __eq__(self, other):
        return (
            isinstance(other, CylinderSet) and
            other.word == self.word and
            other.start == self.start
        )

    def __hash__(self):
        return hash((self.word, self.start))

    @property
    def length(self):
        """ Number of outcome positions read: start + m - 1 """
        return self.start + len(self.word) - 1

    def shifted(self, count=1):
        """ Preimage under the ``count``-fold left shift

        Examples:

          >>> CylinderSet(['0']).shifted(2)
          <CylinderSet: start=3, word=0>
        """
        return CylinderSet(self.word, self.start + count)

    def letter_at(self, position):
        """ Word letter fixed at outcome ``position``, or ``None`` if free """
        if position < self.start or position > self.length:
            return None
        return self.word[position - self.start]


class MatrixMeasureValue(object):
    """ Effect-valued measure of an event: 0 <= mat <= I """
    def __init__(self, mat, validate=True, tol=MEASURE_TOL):
        """
        :raises InvalidStateError: If ``validate`` and the matrix isn't
          Hermitian with spectrum in [0, 1]
        """
        mat = np.asarray(mat, dtype=complex)
        if validate:
            herm = trace_norm(mat - dagger(mat))
            if herm > 1e-10:
                raise InvalidStateError(
                    "measure value not Hermitian (residual %.3g)" % herm,
                    module='measures',
                )
            eigvals = np.linalg.eigvalsh((mat + dagger(mat)) / 2)
            if eigvals[0] < -tol or eigvals[-1] > 1 + tol:
                raise InvalidStateError(
                    "measure value spectrum [%.6g, %.6g] outside [0, 1]" % (
                        eigvals[0], eigvals[-1],
                    ),
                    module='measures',
                )
        self.mat = mat

    def __repr__(self):
        return '<MatrixMeasureValue: dim=%d, trace=%.6g>' % (
            self.mat.shape[0], np.real(np.trace(self.mat)),
        )

    def pair(self, state):
        """ <theta, Q*>: the probability of the event under ``state`` """
        mat = state.mat if hasattr(state, 'mat') else state
        return float(np.real(hs_inner(mat, self.mat)))


def _adjoint_step(kraus, label, mat):
    """ T_label^dagger(mat), or the adjoint channel when ``label`` is None """
    if label is None:
        ops = kraus.ops
        return np.einsum('kji,jl,klm->im', np.conjugate(ops), mat, ops)
    op = kraus.op(label)
    return dagger(op) @ mat @ op


def cylinder_matrix(env, point, cylinder):
    """ Q*_omega of a cylinder, propagated backwards from position
    start + m - 1 to position 1

    :rtype: numpy.ndarray
    """
    mat = np.eye(env.dim, dtype=complex)
    for position in range(cylinder.length, 0, -1):
        kraus = env.ensemble_at(env.advance(point, position))
        mat = _adjoint_step(kraus, cylinder.letter_at(position), mat)
    return mat


def matrix_measure_cylinder(env, point, word):
    """ Q*_omega of the start-1 cylinder of ``word``; the empty word is the
    whole space, with measure I

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import projective_kraus
      >>> env = EnvSystem.constant(projective_kraus())
      >>> measure = matrix_measure_cylinder(env, FinitePoint(0), ['0', '0'])
      >>> bool(np.allclose(measure.mat, np.diag([1, 0])))
      True
      >>> matrix_measure_cylinder(env, FinitePoint(0), []).mat.real.tolist()
      [[1.0, 0.0], [0.0, 1.0]]
    """
    word = list(word)
    if not word:
        return MatrixMeasureValue(np.eye(env.dim, dtype=complex))
    return MatrixMeasureValue(
        cylinder_matrix(env, point, CylinderSet(word))
    )


def orbit_chain(env, point, steps):
    """ Fibers at theta^1(omega) .. theta^steps(omega) """
    return [env.ensemble_at(env.advance(point, step))
            for step in range(1, steps + 1)]


def quenched_cylinder(env, point, state, word):
    """ Q_(theta; omega) of the start-1 cylinder of ``word``:
    Tr(V theta V^dagger) with V the word operator along theta^1..theta^m

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import projective_kraus
      >>> from .matrixcore import QuantumState
      >>> env = EnvSystem.constant(projective_kraus())
      >>> rho = QuantumState(np.diag([0.3, 0.7]))
      >>> round(quenched_cylinder(env, FinitePoint(0), rho, ['0'] * 3), 12)
      0.3
      >>> quenched_cylinder(env, FinitePoint(0), rho, ['0', '1']) == 0
      True
    """
    word = list(word)
    oper = word_operator(orbit_chain(env, point, len(word)), word)
    mat = state.mat if hasattr(state, 'mat') else np.asarray(state)
    return float(np.real(np.trace(oper @ mat @ dagger(oper))))


def quenched_cylinder_set(env, point, state, cylinder):
    """ Q_(theta; omega) of a cylinder with any start """
    mat = state.mat if hasattr(state, 'mat') else np.asarray(state)
    return float(np.real(hs_inner(mat, cylinder_matrix(env, point, cylinder))))


def shift_identity_check(env, point, shift, word, budget=ENUMERATION_BUDGET):
    """ Trace-norm residual of Q*_omega(sigma^-n E) = Phi^(n)dagger_omega
    (Q*_(theta^n omega)(E)) for the start-1 cylinder E of ``word``

    The left side sums V^dagger V over every prefix (a_1..a_n) with V the
    word operator of the prefix followed by ``word``; the right side pulls
    Q* at theta^n(omega) back through the adjoint channels

    :raises EnumerationBudgetError: If n > 12 or |A|^n exceeds ``budget``

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import amplitude_damping_kraus
      >>> env = EnvSystem.constant(amplitude_damping_kraus(0.3))
      >>> shift_identity_check(env, FinitePoint(0), 0, ['1'])
      0.0
      >>> shift_identity_check(env, FinitePoint(0), 3, ['1', '0']) < 1e-10
      True
    """
    word = list(word)
    if shift < 0:
        raise ValueError("Shift must be non-negative, got %s" % shift)
    size = len(env.alphabet) ** shift
    if shift > SHIFT_MAX_N or size > budget:
        raise EnumerationBudgetError(
            "shift n=%d needs %d prefixes; limit is n <= %d and %d "
            "prefixes" % (shift, size, SHIFT_MAX_N, budget)
        )
    if shift == 0:
        return 0.0

    chain = orbit_chain(env, point, shift + len(word))
    left = np.zeros((env.dim, env.dim), dtype=complex)
    for prefix in itertools.product(env.alphabet, repeat=shift):
        oper = word_operator(chain, list(prefix) + word)
        left += dagger(oper) @ oper

    right = matrix_measure_cylinder(
        env, env.advance(point, shift), word,
    ).mat
    for position in range(shift, 0, -1):
        right = _adjoint_step(chain[position - 1], None, right)

    return trace_norm(left - right)


class MonteCarlo(object):
    """ Monte Carlo integration over invariant draws of the environment """
    name = 'mc'

    def __init__(self, samples, seed):
        if samples < 2:
            raise ValueError("Must use at least 2 samples, got %s" % samples)
        self.samples = int(samples)
        self.seed = seed

    def __repr__(self):
        return repr_str(self, ('samples', 'seed'))


class AnnealedEstimate(object):
    """ Annealed probability with its Monte Carlo error bar (zero when
    exact)
    """
    def __init__(self, value, stderr=0.0, mode='exact', samples=None):
        self.value = value
        self.stderr = stderr
        self.mode = mode
        self.samples = samples

    def __repr__(self):
        return repr_str(self, ('mode', 'value', 'stderr', 'samples'))

    @property
    def half_width(self):
        """ 3 sigma half-width """
        return 3 * self.stderr


def future_expectation(env, cylinder):
    """ Y[s] = E[Q*_omega(cylinder) | x_0 = s] for each symbol s of a
    finite environment, by a backward transfer recursion over positions
    start + m - 1 .. 1

    :rtype: numpy.ndarray of shape (K, d, d)
    """
    _, transition = env.symbol_chain()
    size = env.n_symbols
    carry = np.array([np.eye(env.dim, dtype=complex)] * size)
    for position in range(cylinder.length, 0, -1):
        conditional = np.einsum('st,tij->sij', transition, carry)
        label = cylinder.letter_at(position)
        carry = np.array([
            _adjoint_step(env.fibers[sym], label, conditional[sym])
            for sym in range(size)
        ])
    return np.einsum('st,tij->sij', transition, carry)


def _pair_weights(weights, expectation, symbols):
    return float(sum(
        np.real(hs_inner(weights[sym], expectation[sym])) for sym in symbols
    ))


def annealed_exact(env, assignment, cylinder, env_event=None):
    """ Exact annealed probability on a finite environment: the sum over
    symbols s in the event of <E[1{x_0=s} theta], Y[s]>

    :raises QuadratureUnavailableError: For the torus
    """
    if not env.kind.finite:
        raise QuadratureUnavailableError()
    symbols = env.event_symbols(env_event)
    return _pair_weights(
        assignment.symbol_weights(env), future_expectation(env, cylinder),
        symbols,
    )


def _mc_sample(env, assignment, cylinder, env_event, seed, index):
    rng = stream(seed, Purpose.integration, index)
    point = env.sample_invariant(rng)
    if not env.in_event(point, env_event):
        return 0.0
    state = assignment.state_at(env, point)
    return quenched_cylinder_set(env, point, state, cylinder)


def annealed_cylinder(env, assignment, cylinder, integration='exact',
                      env_event=None, threads=1):
    """ Annealed probability of (env event) x (cylinder) under the state
    assignment ``assignment``

    :param integration: ``'exact'`` or a ``MonteCarlo``
    :param env_event: symbols (finite kinds) or ``(low, high)`` (torus);
      ``None`` for the whole environment

    :raises QuadratureUnavailableError: If exact mode is asked for the torus

    Examples:

      >>> from .assignments import FixedState
      >>> from .environment import EnvSystem
      >>> from .families import depolarizing_kraus
      >>> from .matrixcore import QuantumState
      >>> env = EnvSystem.constant(depolarizing_kraus(0.4))
      >>> half = FixedState(QuantumState.maximally_mixed(2))
      >>> [round(annealed_cylinder(env, half, CylinderSet([label])).value, 12)
      ...  for label in env.alphabet]
      [0.7, 0.1, 0.1, 0.1]
    """
    if integration == 'exact':
        return AnnealedEstimate(
            annealed_exact(env, assignment, cylinder, env_event),
        )
    if not isinstance(integration, MonteCarlo):
        raise ValueError("Unknown integration mode %r" % (integration,))

    def sample(index):
        """ Integrand at invariant draw ``index`` """
        return _mc_sample(env, assignment, cylinder, env_event,
                          integration.seed, index)

    indices = range(integration.samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.array(list(pool.map(sample, indices)))
    else:
        values = np.array([sample(index) for index in indices])

    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size))
    logging.debug("MC annealed %s: %d samples, stderr %.3g", cylinder,
                  values.size, stderr)
    return AnnealedEstimate(
        float(np.mean(values)), stderr, mode='mc', samples=values.size,
    )
