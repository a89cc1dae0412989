""" Invertible ergodic environments (Omega, P, theta) and the fiber
assignment omega -> Kraus set

Five kinds are supported:

* ``constant``: a single point
* ``periodic``: K points visited cyclically, uniform invariant measure
* ``quasiperiodic``: rotation x -> x + alpha mod 1 of the circle, Lebesgue
  invariant measure, fibers from a ``ParametricFamily``
* ``iid``: two-sided shift over i.i.d. symbols
* ``markov``: two-sided shift over a stationary Markov chain

The finite kinds all reduce to a stationary Markov chain over fiber indices
("symbols"), which ``symbol_chain`` exposes for exact integration.
"""
import copy
import math

from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse.csgraph

from .channels import kraus_validate
from .exceptions import EnvironmentConfigError, InvalidKrausError
from .families import ParametricFamily
from .util import repr_str


GOLDEN_ALPHA = (math.sqrt(5) - 1) / 2
STOCHASTIC_TOL = 1e-12
SUPPLIED_PI_TOL = 1e-9
SEQUENCE_BLOCK = 256
TORUS_VALIDATION_POINTS = 64


class EnvKind(Enum):
    """ Kind of base dynamical system """
    constant = 'constant'
    periodic = 'periodic'
    quasiperiodic = 'quasiperiodic'
    iid = 'iid'
    markov = 'markov'

    @property
    def finite(self):
        """ Whether fibers are chosen from a finite list of symbols """
        return self is not EnvKind.quasiperiodic


class FinitePoint(object):
    """ Point of a constant or periodic environment: an index k < K """
    def __init__(self, index):
        self.index = int(index)

    def __repr__(self):
        return repr_str(self, ('index',))

    def __eq__(self, other):
        return isinstance(other, FinitePoint) and other.index == self.index

    def __hash__(self):
        return hash(('finite', self.index))


class TorusPoint(object):
    """ Point x = base + offset * alpha (mod 1) on a rotation orbit

    The integer offset makes stepping back and forth exact
    """
    def __init__(self, base, offset=0, alpha=GOLDEN_ALPHA):
        self.base = float(base) % 1.0
        self.offset = int(offset)
        self.alpha = alpha

    def __repr__(self):
        return repr_str(self, ('coord', 'base', 'offset'))

    def __eq__(self, other):
        return (
            isinstance(other, TorusPoint) and
            other.base == self.base and
            other.offset == self.offset and
            other.alpha == self.alpha
        )

    def __hash__(self):
        return hash(('torus', self.base, self.offset, self.alpha))

    @property
    def coord(self):
        """ Coordinate in [0, 1)

        Examples:

          >>> round(TorusPoint(0.9, 1, alpha=0.25).coord, 12)
          0.15
        """
        value = (self.base + (self.offset * self.alpha) % 1.0) % 1.0
        return 0.0 if value >= 1.0 else value


class SymbolSequence(object):
    """ Lazily realized two-sided sequence of symbols (x_k) of a stationary
    chain with initial law ``initial`` and transitions ``transition``

    Coordinates k >= 0 come from a forward stream, k < 0 from a backward
    stream running the time-reversed chain; both are drawn in fixed blocks
    and cached, so values don't depend on the order they're asked for
    """
    def __init__(self, initial, transition, first, forward_seed,
                 backward_seed):
        self._transition_cdf = np.cumsum(transition, axis=1)
        initial = np.asarray(initial, dtype=float)
        reversed_chain = _reverse_chain(initial, transition)
        self._reversed_cdf = np.cumsum(reversed_chain, axis=1)
        self._forward = [int(first)]
        self._backward = []
        self._forward_rng = np.random.Generator(np.random.Philox(forward_seed))
        self._backward_rng = np.random.Generator(
            np.random.Philox(backward_seed)
        )

    def __repr__(self):
        return '<SymbolSequence: realized=[%d, %d)>' % (
            -len(self._backward), len(self._forward),
        )

    @staticmethod
    def _draw(cdf_rows, previous, uniforms):
        out = []
        for uniform in uniforms:
            row = cdf_rows[previous]
            previous = min(
                int(np.searchsorted(row, uniform, side='right')),
                len(row) - 1,
            )
            out.append(previous)
        return out

    def __getitem__(self, position):
        while position >= len(self._forward):
            uniforms = self._forward_rng.random(SEQUENCE_BLOCK)
            self._forward.extend(
                self._draw(self._transition_cdf, self._forward[-1], uniforms)
            )
        while -position > len(self._backward):
            previous = (self._backward[-1] if self._backward
                        else self._forward[0])
            uniforms = self._backward_rng.random(SEQUENCE_BLOCK)
            self._backward.extend(
                self._draw(self._reversed_cdf, previous, uniforms)
            )
        if position >= 0:
            return self._forward[position]
        return self._backward[-position - 1]


class SequencePoint(object):
    """ Point of an i.i.d. or Markov shift: a two-sided sequence read from
    ``position`` (the sequence's coordinate 0 is this point's coordinate
    ``-position``)
    """
    def __init__(self, sequence, position=0):
        self.sequence = sequence
        self.position = int(position)

    def __repr__(self):
        return repr_str(self, ('position', 'symbol'))

    def __eq__(self, other):
        return (
            isinstance(other, SequencePoint) and
            other.sequence is self.sequence and
            other.position == self.position
        )

    def __hash__(self):
        return hash(('sequence', id(self.sequence), self.position))

    @property
    def symbol(self):
        """ Symbol at coordinate 0 """
        return self.sequence[self.position]


def _reverse_chain(stationary, transition):
    """ Time reversal P^(i, j) = pi(j) P(j, i) / pi(i) of a stationary chain
    """
    stationary = np.asarray(stationary, dtype=float)
    transition = np.asarray(transition, dtype=float)
    reversed_chain = (transition * stationary[:, None]).T / stationary[:, None]
    return reversed_chain / reversed_chain.sum(axis=1, keepdims=True)


def stationary_distribution(transition):
    """ Left eigenvector of ``transition`` for eigenvalue 1, normalized

    Examples:

      >>> pi = stationary_distribution([[0.7, 0.3], [0.45, 0.55]])
      >>> pi.round(12).tolist()
      [0.6, 0.4]
    """
    transition = np.asarray(transition, dtype=float)
    eigvals, eigvecs = scipy.linalg.eig(transition.T)
    idx = int(np.argmin(np.abs(eigvals - 1)))
    vector = np.real(eigvecs[:, idx])
    return vector / vector.sum()


class EnvSystem(object):
    """ Invertible ergodic environment with its fiber assignment

    Build with the ``constant``, ``periodic``, ``quasiperiodic``, ``iid``
    or ``markov`` constructors; instances are immutable
    """
    def __init__(self, kind, fibers=None, family=None, alpha=None,
                 initial=None, transition=None):
        self.kind = kind
        self.fibers = tuple(fibers) if fibers is not None else None
        self.family = family
        self.alpha = alpha
        self._initial = initial
        self._transition = transition
        if self.fibers is not None:
            self._check_fibers()
            self.dim = self.fibers[0].dim
            self.alphabet = self.fibers[0].alphabet
        else:
            self.dim = family.dim
            self.alphabet = family.alphabet

    def __repr__(self):
        def updater(props):
            """ Add the number of symbols for finite kinds """
            if self.fibers is not None:
                props.append(('symbols', len(self.fibers)))
            return props
        return repr_str(self, ('kind', 'dim', 'alpha'), updater)

    def _check_fibers(self):
        if not self.fibers:
            raise EnvironmentConfigError("Must give at least one fiber")
        first = self.fibers[0]
        for idx, fiber in enumerate(self.fibers):
            if fiber.dim != first.dim:
                raise EnvironmentConfigError(
                    "fiber %d has dimension %d, fiber 0 has %d" % (
                        idx, fiber.dim, first.dim,
                    )
                )
            if fiber.alphabet != first.alphabet:
                raise EnvironmentConfigError(
                    "fiber %d alphabet (%s) differs from fiber 0 (%s)" % (
                        idx, ', '.join(fiber.alphabet),
                        ', '.join(first.alphabet),
                    )
                )
            report = kraus_validate(fiber)
            if not report.passed:
                raise InvalidKrausError(
                    "fiber %d (%s) is not stochastic: residual %.3g above "
                    "%.3g" % (idx, fiber.name or '?', report.residual,
                              report.tol),
                    module='environment',
                )

    @classmethod
    def constant(cls, kraus):
        """ Single-point environment

        Examples:

          >>> from .families import depolarizing_kraus
          >>> EnvSystem.constant(depolarizing_kraus(0.4))
          <EnvSystem: kind=constant, dim=2, symbols=1>
        """
        return cls(
            EnvKind.constant, fibers=[kraus],
            initial=np.ones(1), transition=np.ones((1, 1)),
        )

    @classmethod
    def periodic(cls, fibers):
        """ K-cycle visiting ``fibers`` in order """
        fibers = list(fibers)
        size = len(fibers)
        return cls(
            EnvKind.periodic, fibers=fibers,
            initial=np.full(size, 1.0 / max(size, 1)),
            transition=np.roll(np.eye(size), 1, axis=1),
        )

    @classmethod
    def quasiperiodic(cls, family, alpha=GOLDEN_ALPHA):
        """ Circle rotation by ``alpha`` with fibers ``family(x)``

        :param family: a ``ParametricFamily``, or its registered name
        :raises EnvironmentConfigError: If alpha isn't in (0, 1)
        """
        if not 0 < alpha < 1:
            raise EnvironmentConfigError(
                "alpha must be in (0, 1), got %s" % alpha
            )
        if isinstance(family, str):
            family = ParametricFamily(family)
        family.validate(
            np.arange(TORUS_VALIDATION_POINTS) / TORUS_VALIDATION_POINTS
        )
        return cls(EnvKind.quasiperiodic, family=family, alpha=float(alpha))

    @classmethod
    def iid(cls, fibers, weights):
        """ i.i.d. symbols drawn with ``weights``

        :raises EnvironmentConfigError: If weights are negative, don't sum
          to 1 or don't match the fibers
        """
        fibers = list(fibers)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(fibers),):
            raise EnvironmentConfigError(
                "Got %d weights for %d fibers" % (weights.size, len(fibers))
            )
        if np.any(weights < 0) or abs(weights.sum() - 1) > STOCHASTIC_TOL:
            raise EnvironmentConfigError(
                "iid weights must be non-negative and sum to 1, got %s" % (
                    weights.tolist(),
                )
            )
        if np.any(weights == 0):
            raise EnvironmentConfigError(
                "iid weights must be positive; drop unused fibers instead"
            )
        return cls(
            EnvKind.iid, fibers=fibers,
            initial=weights, transition=np.tile(weights, (len(fibers), 1)),
        )

    @classmethod
    def markov(cls, fibers, transition, stationary=None):
        """ Stationary Markov chain over fiber indices

        The stationary law is solved from ``transition``; a supplied
        ``stationary`` is checked against it

        :raises EnvironmentConfigError: If ``transition`` isn't an
          irreducible row-stochastic matrix, or ``stationary`` disagrees

        Examples:

          >>> from .families import depolarizing_kraus
          >>> env = EnvSystem.markov(
          ...     [depolarizing_kraus(0.4), depolarizing_kraus(0.2)],
          ...     [[0.7, 0.3], [0.45, 0.55]])
          >>> env.symbol_chain()[0].round(12).tolist()
          [0.6, 0.4]

          >>> EnvSystem.markov(
          ...     [depolarizing_kraus(0.4), depolarizing_kraus(0.2)],
          ...     [[1, 0], [0, 1]])
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.EnvironmentConfigError: [environment] markov transition matrix is not irreducible
        """
        fibers = list(fibers)
        transition = np.asarray(transition, dtype=float)
        size = len(fibers)
        if transition.shape != (size, size):
            raise EnvironmentConfigError(
                "markov transition matrix must be %dx%d, got %s" % (
                    size, size, transition.shape,
                )
            )
        row_sums = transition.sum(axis=1)
        if np.any(transition < 0) or np.any(
                np.abs(row_sums - 1) > STOCHASTIC_TOL):
            raise EnvironmentConfigError(
                "markov transition matrix must be row-stochastic, row sums "
                "%s" % row_sums.tolist()
            )
        components, _ = scipy.sparse.csgraph.connected_components(
            transition > 0, directed=True, connection='strong',
        )
        if components != 1:
            raise EnvironmentConfigError(
                "markov transition matrix is not irreducible"
            )
        solved = stationary_distribution(transition)
        residual = float(np.sum(np.abs(solved @ transition - solved)))
        if residual > STOCHASTIC_TOL:
            raise EnvironmentConfigError(
                "markov stationary solve residual %.3g above %.3g" % (
                    residual, STOCHASTIC_TOL,
                )
            )
        if stationary is not None:
            stationary = np.asarray(stationary, dtype=float)
            if stationary.shape != solved.shape or np.sum(
                    np.abs(stationary - solved)) > SUPPLIED_PI_TOL:
                raise EnvironmentConfigError(
                    "supplied stationary law %s isn't stationary for the "
                    "transition matrix (solved %s)" % (
                        stationary.tolist(), solved.round(12).tolist(),
                    )
                )
        return cls(
            EnvKind.markov, fibers=fibers,
            initial=solved, transition=transition,
        )

    @property
    def n_symbols(self):
        """ Number of fibers for finite kinds, ``None`` for the torus """
        return None if self.fibers is None else len(self.fibers)

    def symbol_chain(self):
        """ (initial law, transition matrix) of the symbol process

        :raises EnvironmentConfigError: For the quasiperiodic kind
        """
        if not self.kind.finite:
            raise EnvironmentConfigError(
                "quasiperiodic environments have no finite symbol chain"
            )
        return self._initial.copy(), self._transition.copy()

    def sample_invariant(self, rng):
        """ Point distributed per the invariant measure

        :param numpy.random.Generator rng: source of randomness
        """
        if self.kind is EnvKind.constant:
            return FinitePoint(0)
        if self.kind is EnvKind.periodic:
            return FinitePoint(rng.integers(len(self.fibers)))
        if self.kind is EnvKind.quasiperiodic:
            return TorusPoint(rng.random(), 0, self.alpha)
        first = min(
            int(np.searchsorted(np.cumsum(self._initial), rng.random(),
                                side='right')),
            len(self._initial) - 1,
        )
        seeds = rng.integers(0, 2 ** 63, size=2)
        return SequencePoint(SymbolSequence(
            self._initial, self._transition, first, int(seeds[0]),
            int(seeds[1]),
        ))

    def point(self, value):
        """ Point from a config value: an index for constant and periodic
        kinds, a coordinate in [0, 1) for the torus

        :raises EnvironmentConfigError: For sequence kinds or bad values
        """
        if self.kind in (EnvKind.constant, EnvKind.periodic):
            index = int(value)
            if not 0 <= index < len(self.fibers):
                raise EnvironmentConfigError(
                    "point index %s out of range for %d fibers" % (
                        value, len(self.fibers),
                    )
                )
            return FinitePoint(index)
        if self.kind is EnvKind.quasiperiodic:
            coord = float(value)
            if not 0 <= coord < 1:
                raise EnvironmentConfigError(
                    "torus coordinate must be in [0, 1), got %s" % value
                )
            return TorusPoint(coord, 0, self.alpha)
        raise EnvironmentConfigError(
            "%s points can't be given explicitly; sample them"
            % self.kind.value
        )

    def step(self, point):
        """ theta(omega)

        Examples:

          >>> from .families import depolarizing_kraus as depol
          >>> env = EnvSystem.periodic([depol(0.1), depol(0.2), depol(0.3)])
          >>> env.step(FinitePoint(2))
          <FinitePoint: index=0>
        """
        return self._move(point, 1)

    def step_back(self, point):
        """ theta^-1(omega) """
        return self._move(point, -1)

    def advance(self, point, count):
        """ theta^count(omega), ``count`` may be negative """
        return self._move(point, count)

    def _move(self, point, count):
        if self.kind is EnvKind.constant:
            return point
        if self.kind is EnvKind.periodic:
            return FinitePoint((point.index + count) % len(self.fibers))
        if self.kind is EnvKind.quasiperiodic:
            return TorusPoint(point.base, point.offset + count, point.alpha)
        return SequencePoint(point.sequence, point.position + count)

    def symbol(self, point):
        """ Fiber index at ``point`` (finite kinds only) """
        if self.kind is EnvKind.constant:
            return 0
        if self.kind is EnvKind.periodic:
            return point.index
        if self.kind is EnvKind.quasiperiodic:
            raise EnvironmentConfigError(
                "quasiperiodic points have no symbol"
            )
        return point.symbol

    def symbols(self, point, start, stop):
        """ Symbols at theta^k(omega) for k in [start, stop) """
        return [self.symbol(self._move(point, idx))
                for idx in range(start, stop)]

    def ensemble_at(self, point):
        """ The fiber Kraus set at ``point``

        Examples:

          >>> from .families import depolarizing_kraus as depol
          >>> first, second = depol(0.1), depol(0.2)
          >>> env = EnvSystem.periodic([first, second])
          >>> env.ensemble_at(env.step(FinitePoint(0))) is second
          True
        """
        if self.kind is EnvKind.quasiperiodic:
            return self.family(point.coord)
        return self.fibers[self.symbol(point)]

    def in_event(self, point, event):
        """ Whether ``point`` lies in an environment event: a collection of
        symbols for finite kinds, or a ``(low, high)`` interval for the torus.
        ``None`` is the whole space
        """
        if event is None:
            return True
        if self.kind is EnvKind.quasiperiodic:
            low, high = event
            return low <= point.coord < high
        return self.symbol(point) in event

    def event_symbols(self, event):
        """ Event as a sorted list of symbols (finite kinds)

        :raises EnvironmentConfigError: If symbols are out of range
        """
        if event is None:
            return list(range(len(self.fibers)))
        symbols = sorted(set(int(sym) for sym in event))
        for sym in symbols:
            if not 0 <= sym < len(self.fibers):
                raise EnvironmentConfigError(
                    "event symbol %s out of range for %d fibers" % (
                        sym, len(self.fibers),
                    )
                )
        return symbols

    def copy_point(self, point):
        """ Independent copy of ``point`` for use by another worker; sequence
        points get their own cache and streams
        """
        if isinstance(point, SequencePoint):
            return SequencePoint(copy.deepcopy(point.sequence), point.position)
        return point

    def describe(self):
        """ Flat description for report metadata """
        info = {
            'kind': self.kind.value,
            'dim': self.dim,
            'alphabet_size': len(self.alphabet),
        }
        if self.fibers is not None:
            info['symbols'] = len(self.fibers)
        if self.alpha is not None:
            info['alpha'] = repr(self.alpha)
        return info

