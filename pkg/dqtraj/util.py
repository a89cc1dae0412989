""" Small helpers shared across dqtraj """
import datetime

from enum import Enum
from functools import wraps

import iso8601
import numpy as np


U64_MAX = 2 ** 64 - 1


def _repr_value(value):
    """ Compact rendering of a single ``repr_str`` value """
    if isinstance(value, (float, np.floating)):
        return '%.6g' % value
    if isinstance(value, np.ndarray):
        return 'array%s' % (value.shape,)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def repr_str(obj, attrs, update=None):
    """ Generic attr to string mappings for repr functions

    ``None`` values are skipped; floats are rendered with 6 significant
    digits and arrays by their shape

    Examples:

      Setup:

        >>> class ReprTest(object):
        ...     pass

      Simple values:

        >>> obj = ReprTest()
        >>> obj.dim = 2
        >>> obj.tol = 1e-10
        >>> obj.name = None
        >>> obj.mat = np.eye(2)
        >>> repr_str(obj, ('dim', 'tol', 'name', 'mat'))
        '<ReprTest: dim=2, tol=1e-10, mat=array(2, 2)>'

      Custom updater:

        >>> repr_str(obj, ('dim',), lambda props: props + [('kind', 'x')])
        '<ReprTest: dim=2, kind=x>'
    """
    props = [
        (attr, value)
        for attr, value in (
            (attr, getattr(obj, attr))
            for attr in attrs
        )
        if value is not None
    ]

    if update is not None:
        props = update(props)

    props_str = ', '.join(
        '%s=%s' % (attr, _repr_value(value)) for attr, value in props
    )
    return "<{klass}: {props_str}>".format(
        klass=obj.__class__.__name__,
        props_str=props_str,
    )


def ts_setter(func):
    """ Decorator for setters that parses ISO8601 timestamps automatically

    Naive datetimes are assumed to be UTC

    :param value: Pre-parsed, or ISO8601 string date
    :type value: None, datetime.datetime, str

    :raises iso8601.iso8601.ParseError: If unparseable date string

    Examples:

      >>> @ts_setter
      ... def mysetter(self, value):
      ...     print('V:', value)
      >>> self_ = None

      >>> mysetter(self_, '2016-01-01T12:22:22')
      V: 2016-01-01 12:22:22+00:00

      >>> mysetter(self_, None)
      V: None

      >>> mysetter(self_, datetime.datetime(2016, 1, 1, 12, 22, 22))
      V: 2016-01-01 12:22:22+00:00

      >>> mysetter(self_, 'test')
      Traceback (most recent call last):
      ...
      iso8601.iso8601.ParseError: Unable to parse date string 'test'
    """

    @wraps(func)
    def inner(self, value):
        """ Parse input value as ISO8601 date """
        if value is None:
            return func(self, None)
        elif isinstance(value, datetime.datetime):
            if value.tzinfo is None:
                value = value.replace(tzinfo=datetime.timezone.utc)
            return func(self, value)
        else:
            return func(self, iso8601.parse_date(value))

    return inner


def parse_seed(value):
    """ Parse an unsigned 64 bit seed, forcing base 10 on strings

    :raises ValueError: If the value is negative, too large, or unparseable

    Examples:

      >>> parse_seed('20240101')
      20240101
      >>> parse_seed(7)
      7

      >>> parse_seed(-1)
      Traceback (most recent call last):
      ...
      ValueError: Seed must be in [0, 2**64 - 1], got -1

      >>> parse_seed('0xff')
      Traceback (most recent call last):
      ...
      ValueError: invalid literal for int() with base 10: '0xff'
    """
    if isinstance(value, bool):
        raise ValueError("Seed must be an integer, got %r" % value)
    if isinstance(value, (int, np.integer)):
        seed = int(value)
    else:
        seed = int(value, base=10)

    if not 0 <= seed <= U64_MAX:
        raise ValueError("Seed must be in [0, 2**64 - 1], got %s" % seed)

    return seed


def doubling_checkpoints(maximum, start=1):
    """ Powers of two from ``start`` up to ``maximum``, always ending with
    ``maximum``

    Examples:

      >>> doubling_checkpoints(20)
      [1, 2, 4, 8, 16, 20]
      >>> doubling_checkpoints(16, start=4)
      [4, 8, 16]
    """
    points = []
    value = start
    while value < maximum:
        points.append(value)
        value *= 2
    points.append(maximum)
    return points
