import numpy as np
import pytest

from dqtraj.channels import KrausSet
from dqtraj.environment import (
    EnvKind,
    EnvSystem,
    FinitePoint,
    SequencePoint,
    TorusPoint,
    stationary_distribution,
)
from dqtraj.exceptions import EnvironmentConfigError, InvalidKrausError
from dqtraj.families import depolarizing_kraus, projective_kraus
from dqtraj.rng import Purpose, stream


def test_step_and_step_back_are_inverse(any_env):
    point = any_env.sample_invariant(stream(1, Purpose.anchor, 0))
    assert any_env.step_back(any_env.step(point)) == point
    assert any_env.advance(any_env.advance(point, 5), -5) == point


def test_periodic_cycle(periodic_depol):
    point = FinitePoint(1)
    assert periodic_depol.step(point) == FinitePoint(0)
    assert periodic_depol.advance(point, -3) == FinitePoint(0)
    assert periodic_depol.symbols(FinitePoint(0), 0, 4) == [0, 1, 0, 1]
    assert periodic_depol.ensemble_at(FinitePoint(1)) is \
        periodic_depol.fibers[1]


def test_torus_rotation_coordinates(torus_rotation):
    point = TorusPoint(0.9, 0, torus_rotation.alpha)
    moved = torus_rotation.advance(point, 3)
    assert moved.coord == pytest.approx((0.9 + 3 * torus_rotation.alpha) % 1)
    assert 0 <= moved.coord < 1
    assert torus_rotation.advance(moved, -3).coord == pytest.approx(0.9)


def test_sequence_symbols_are_order_independent(markov_depol):
    first = markov_depol.sample_invariant(stream(3, Purpose.anchor, 0))
    second = markov_depol.sample_invariant(stream(3, Purpose.anchor, 0))
    assert isinstance(first, SequencePoint)
    forward = markov_depol.symbols(first, -300, 300)
    # far end first, walking towards the past
    scattered = [markov_depol.symbol(markov_depol.advance(second, idx))
                 for idx in range(299, -301, -1)]
    assert forward == scattered[::-1]


def test_markov_symbol_frequencies(markov_depol):
    point = markov_depol.sample_invariant(stream(5, Purpose.anchor, 0))
    symbols = np.array(markov_depol.symbols(point, 0, 20000))
    assert np.mean(symbols == 0) == pytest.approx(0.6, abs=0.03)
    # backward chain has the same stationary law
    back = np.array(markov_depol.symbols(point, -20000, 0))
    assert np.mean(back == 0) == pytest.approx(0.6, abs=0.03)


def test_invariant_sampling_of_periodic(periodic_depol):
    counts = np.bincount([
        periodic_depol.sample_invariant(stream(9, Purpose.anchor, idx)).index
        for idx in range(400)
    ], minlength=2)
    assert counts[0] == pytest.approx(200, abs=45)


def test_stationary_distribution():
    assert np.allclose(stationary_distribution(
        np.array([[0.7, 0.3], [0.45, 0.55]])), [0.6, 0.4])


def test_markov_checks():
    fibers = [depolarizing_kraus(0.4), depolarizing_kraus(0.2)]
    with pytest.raises(EnvironmentConfigError):
        EnvSystem.markov(fibers, [[0.7, 0.2], [0.45, 0.55]])
    with pytest.raises(EnvironmentConfigError):
        EnvSystem.markov(fibers, [[0.7, 0.3], [0.45, 0.55]], [0.5, 0.5])
    env = EnvSystem.markov(fibers, [[0.7, 0.3], [0.45, 0.55]], [0.6, 0.4])
    assert env.kind is EnvKind.markov


def test_iid_checks():
    fibers = [depolarizing_kraus(0.4), depolarizing_kraus(0.2)]
    with pytest.raises(EnvironmentConfigError):
        EnvSystem.iid(fibers, [0.3, 0.3])
    with pytest.raises(EnvironmentConfigError):
        EnvSystem.iid(fibers, [0.5])


def test_fiber_alphabets_must_agree():
    relabelled = projective_kraus()
    other = KrausSet([np.diag([1, 0]), np.diag([0, 1])], labels=['u', 'd'])
    with pytest.raises(EnvironmentConfigError) as err:
        EnvSystem.periodic([relabelled, other])
    assert 'alphabet' in str(err.value)


def test_fibers_must_be_stochastic():
    bad = KrausSet([np.eye(2), np.eye(2)], name='double')
    with pytest.raises(InvalidKrausError):
        EnvSystem.periodic([depolarizing_kraus(0.1), bad])


def test_events(periodic_depol, torus_rotation):
    assert periodic_depol.in_event(FinitePoint(1), [1])
    assert not periodic_depol.in_event(FinitePoint(0), [1])
    assert periodic_depol.event_symbols(None) == [0, 1]
    with pytest.raises(EnvironmentConfigError):
        periodic_depol.event_symbols([3])
    assert torus_rotation.in_event(TorusPoint(0.3), (0.25, 0.5))


def test_explicit_points(periodic_depol, markov_depol):
    assert periodic_depol.point(1) == FinitePoint(1)
    with pytest.raises(EnvironmentConfigError):
        periodic_depol.point(2)
    with pytest.raises(EnvironmentConfigError):
        markov_depol.point(0)


def test_copy_point_is_independent(markov_depol):
    point = markov_depol.sample_invariant(stream(2, Purpose.anchor, 0))
    copied = markov_depol.copy_point(point)
    assert copied.sequence is not point.sequence
    assert markov_depol.symbols(copied, -50, 50) == \
        markov_depol.symbols(point, -50, 50)
