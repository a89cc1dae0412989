""" Named Kraus sets, and parametric families of Kraus sets over the torus

Both kinds are looked up by name from config files. New families are added
with the registries' ``register`` decorators::

    @KRAUS_FAMILIES.register('my_family')
    def my_family(strength=0.5):
        return KrausSet(...)
"""
import math

import numpy as np
import scipy.linalg

from .channels import KrausSet, kraus_validate
from .exceptions import EnvironmentConfigError, InvalidKrausError


PAULI = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}


class FamilyRegistry(object):
    """ Name to constructor mapping, filled in by decorator """
    def __init__(self, kind):
        self.kind = kind
        self._builders = {}

    def register(self, name):
        """ Decorator to register the function as the builder for ``name``

        Examples:

          >>> registry = FamilyRegistry('demo family')
          >>> @registry.register('single')
          ... def single():
          ...     return 'built'
          >>> registry.get('single')()
          'built'
          >>> registry.names()
          ['single']
        """
        def decorator(func):
            """ Store ``func`` under ``name`` """
            self._builders[name] = func
            return func
        return decorator

    def get(self, name):
        """ Builder registered as ``name``

        :raises EnvironmentConfigError: If nothing is registered as ``name``

        Examples:

          >>> KRAUS_FAMILIES.get('nope')
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.EnvironmentConfigError: [families] unknown Kraus family 'nope'
        """
        try:
            return self._builders[name]
        except KeyError:
            raise EnvironmentConfigError(
                "unknown %s '%s'" % (self.kind, name), module='families',
            )

    def names(self):
        """ Registered names, sorted """
        return sorted(self._builders)


KRAUS_FAMILIES = FamilyRegistry('Kraus family')
PARAMETRIC_FAMILIES = FamilyRegistry('parametric family')


def rotation_unitary(dim, axis, angle):
    """ exp(-i angle G / 2) for a Pauli axis G ('x', 'y', 'z'; d = 2 only),
    or diag(exp(-i angle k)) for k = 0..d-1 on the 'diag' axis

    :raises ValueError: If the axis is unknown or needs d = 2

    Examples:

      >>> flip = rotation_unitary(2, 'x', math.pi)
      >>> bool(np.allclose(flip, -1j * PAULI['X']))
      True
      >>> bool(np.allclose(rotation_unitary(3, 'diag', 0), np.eye(3)))
      True
    """
    axis = str(axis).lower()
    if axis == 'diag':
        return np.diag(np.exp(-1j * angle * np.arange(dim)))
    if axis not in ('x', 'y', 'z'):
        raise ValueError("Unknown rotation axis '%s'" % axis)
    if dim != 2:
        raise ValueError("Pauli axis '%s' needs dimension 2, got %d" % (
            axis, dim,
        ))
    return scipy.linalg.expm(-0.5j * angle * PAULI[axis.upper()])


def _check_probability(name, value, upper=1.0):
    if not 0 <= value <= upper:
        raise EnvironmentConfigError(
            "%s must be in [0, %g], got %s" % (name, upper, value),
            module='families',
        )


@KRAUS_FAMILIES.register('identity')
def identity_kraus(dim=2):
    """ {I}, the trivial measurement with one outcome 'I' """
    return KrausSet([np.eye(dim)], labels=['I'], name='identity')


@KRAUS_FAMILIES.register('projective')
def projective_kraus(dim=2):
    """ Computational-basis projectors |k><k|, labels '0'..'d-1'

    Examples:

      >>> projective_kraus(3).alphabet
      ('0', '1', '2')
    """
    ops = []
    for idx in range(dim):
        proj = np.zeros((dim, dim), dtype=complex)
        proj[idx, idx] = 1
        ops.append(proj)
    return KrausSet(ops, name='projective')


@KRAUS_FAMILIES.register('depolarizing')
def depolarizing_kraus(p):
    """ {sqrt(1 - 3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}, labels
    I, X, Y, Z

    Examples:

      >>> from .channels import channel_of
      >>> from .matrixcore import QuantumState
      >>> depol = channel_of(depolarizing_kraus(0.4))
      >>> out = depol.apply(QuantumState.pure(2, 0))
      >>> np.diag(out).real.round(12).tolist()
      [0.8, 0.2]
    """
    _check_probability('depolarizing p', p, 4.0 / 3)
    return KrausSet(
        [
            math.sqrt(1 - 3 * p / 4) * PAULI['I'],
            math.sqrt(p / 4) * PAULI['X'],
            math.sqrt(p / 4) * PAULI['Y'],
            math.sqrt(p / 4) * PAULI['Z'],
        ],
        labels=['I', 'X', 'Y', 'Z'],
        name='depolarizing(%g)' % p,
    )


@KRAUS_FAMILIES.register('amplitude_damping')
def amplitude_damping_kraus(gamma):
    """ Decay |1> -> |0> with probability ``gamma``; label '1' is the jump """
    _check_probability('amplitude damping gamma', gamma)
    return KrausSet(
        [
            np.array([[1, 0], [0, math.sqrt(1 - gamma)]]),
            np.array([[0, math.sqrt(gamma)], [0, 0]]),
        ],
        name='amplitude_damping(%g)' % gamma,
    )


@KRAUS_FAMILIES.register('dephasing')
def dephasing_kraus(p):
    """ {sqrt(1 - p) I, sqrt(p) Z}, labels I, Z """
    _check_probability('dephasing p', p)
    return KrausSet(
        [math.sqrt(1 - p) * PAULI['I'], math.sqrt(p) * PAULI['Z']],
        labels=['I', 'Z'],
        name='dephasing(%g)' % p,
    )


def kraus_family(name, labels=None, rotate=None, **params):
    """ Build the registered Kraus set ``name``

    :param labels: optional relabelling, alphabet order
    :param dict rotate: optional ``{axis, angle}``; the set is
      pre-multiplied by ``rotation_unitary``

    :raises EnvironmentConfigError: If the name or parameters are bad

    Examples:

      >>> kraus_family('depolarizing', p=0.4).alphabet
      ('I', 'X', 'Y', 'Z')
      >>> kraus_family('projective', labels=['up', 'down']).alphabet
      ('up', 'down')
    """
    builder = KRAUS_FAMILIES.get(name)
    try:
        kraus = builder(**params)
    except TypeError as ex:
        raise EnvironmentConfigError(
            "bad parameters for Kraus family '%s': %s" % (name, ex),
            module='families',
        )
    if labels is not None:
        kraus = KrausSet(list(kraus.ops), labels=labels, name=kraus.name)
    if rotate is not None:
        unitary = rotation_unitary(
            kraus.dim, rotate.get('axis', 'z'), float(rotate.get('angle', 0)),
        )
        kraus = kraus.premultiply(
            unitary, name='%s@%s' % (kraus.name, rotate.get('axis', 'z')),
        )
    return kraus


class ParametricFamily(object):
    """ Map from a torus coordinate x in [0, 1) to a Kraus set """
    def __init__(self, name, **params):
        """
        :raises EnvironmentConfigError: If the family is unknown, its
          parameters are bad, or it isn't a Kraus ensemble at sample points
        """
        self.name = name
        self.params = params
        self._builder = PARAMETRIC_FAMILIES.get(name)
        probe = self(0.0)
        self.dim = probe.dim
        self.alphabet = probe.alphabet

    def __repr__(self):
        return '<ParametricFamily: %s %s>' % (self.name, self.params)

    def __call__(self, coord):
        try:
            return self._builder(coord, **self.params)
        except TypeError as ex:
            raise EnvironmentConfigError(
                "bad parameters for parametric family '%s': %s" % (
                    self.name, ex,
                ),
                module='families',
            )

    def validate(self, coords, tol=1e-10):
        """ Check the Kraus condition at each coordinate

        :raises InvalidKrausError: At the first failing coordinate
        :raises EnvironmentConfigError: If the alphabet changes
        """
        for coord in coords:
            kraus = self(coord)
            if kraus.alphabet != self.alphabet:
                raise EnvironmentConfigError(
                    "parametric family '%s' changes alphabet at x=%s" % (
                        self.name, coord,
                    ),
                    module='families',
                )
            report = kraus_validate(kraus, tol)
            if not report.passed:
                raise InvalidKrausError(
                    "parametric family '%s' not stochastic at x=%s "
                    "(residual %.3g)" % (self.name, coord, report.residual),
                    module='families',
                )


@PARAMETRIC_FAMILIES.register('rotated')
def rotated_family(coord, base, axis='z', scale=1.0):
    """ Fixed base set pre-multiplied by ``rotation_unitary`` of angle
    2 pi scale x

    Examples:

      >>> family = ParametricFamily(
      ...     'rotated', base={'family': 'depolarizing', 'p': 0.4})
      >>> family.validate(np.linspace(0, 1, 5, endpoint=False))
      >>> family.alphabet
      ('I', 'X', 'Y', 'Z')
    """
    base = dict(base)
    kraus = kraus_family(base.pop('family'), **base)
    return kraus.premultiply(
        rotation_unitary(kraus.dim, axis, 2 * math.pi * scale * coord),
        name='%s rotated' % kraus.name,
    )


@PARAMETRIC_FAMILIES.register('modulated_depolarizing')
def modulated_depolarizing_family(coord, p0, amplitude):
    """ Depolarizing set with p(x) = p0 + amplitude sin(2 pi x)

    p ranges over [0, 4/3], the domain of ``depolarizing_kraus``; p = 4/3
    is the fully depolarizing Pauli twirl

    :raises EnvironmentConfigError: If p(x) can leave [0, 4/3]
    """
    if p0 - abs(amplitude) < 0 or p0 + abs(amplitude) > 4.0 / 3:
        raise EnvironmentConfigError(
            "modulated depolarizing p0 +/- amplitude must stay in [0, 4/3]",
            module='families',
        )
    return depolarizing_kraus(p0 + amplitude * math.sin(2 * math.pi * coord))
