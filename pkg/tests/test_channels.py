import numpy as np
import pytest

from dqtraj.channels import (
    KrausSet,
    SuperOp,
    apply_T,
    apply_T_adjoint,
    channel_of,
    compose_backward,
    compose_forward,
    kraus_validate,
    word_operator,
)
from dqtraj.exceptions import (
    EnvironmentConfigError,
    InvalidKrausError,
    UnknownLabelError,
)
from dqtraj.families import (
    ParametricFamily,
    amplitude_damping_kraus,
    dephasing_kraus,
    depolarizing_kraus,
    kraus_family,
    projective_kraus,
    rotation_unitary,
)
from dqtraj.matrixcore import QuantumState, hs_inner, random_state


STANDARD_SETS = [
    depolarizing_kraus(0.4),
    depolarizing_kraus(4.0 / 3),
    amplitude_damping_kraus(0.3),
    dephasing_kraus(0.25),
    projective_kraus(3),
    kraus_family('depolarizing', p=0.1, rotate={'axis': 'z', 'angle': 0.4}),
]


@pytest.mark.parametrize('kraus', STANDARD_SETS)
def test_standard_sets_are_stochastic(kraus):
    report = kraus_validate(kraus)
    assert report.passed
    assert report.residual < 1e-12
    assert channel_of(kraus).trace_preservation_residual() < 1e-12


def test_kraus_validate_reports_residual():
    doubled = KrausSet([np.eye(2), np.eye(2)], name='double')
    report = kraus_validate(doubled)
    assert not report
    assert report.residual == pytest.approx(2.0)
    with pytest.raises(InvalidKrausError) as err:
        channel_of(doubled)
    assert 'double' in str(err.value)


def test_depolarizing_labels_and_born_probabilities():
    kraus = depolarizing_kraus(0.4)
    assert kraus.alphabet == ('I', 'X', 'Y', 'Z')
    probs = kraus.born_probabilities(QuantumState.pure(2, 0))
    assert np.allclose(probs, [0.7, 0.1, 0.1, 0.1])


def test_unknown_label():
    with pytest.raises(UnknownLabelError):
        depolarizing_kraus(0.4).op('W')


def test_apply_T_and_adjoint_are_dual(rng):
    kraus = amplitude_damping_kraus(0.3)
    state = random_state(2, rng).mat
    effect = random_state(2, rng).mat
    for label in kraus.alphabet:
        assert hs_inner(apply_T(kraus, label, state), effect) == \
            pytest.approx(hs_inner(state, apply_T_adjoint(kraus, label,
                                                          effect)))


def test_compose_forward_applies_first_element_first():
    damp = amplitude_damping_kraus(1.0)
    flip = KrausSet([np.array([[0, 1], [1, 0]])], labels=['X'])
    excited = QuantumState.pure(2, 1).mat
    # damp then flip: |1> -> |0> -> |1>
    assert np.allclose(compose_forward([damp, flip]).apply(excited),
                       excited)
    # flip then damp: |1> -> |0> -> |0>
    assert np.allclose(compose_forward([flip, damp]).apply(excited),
                       QuantumState.pure(2, 0).mat)
    assert np.allclose(compose_backward([damp, flip]).matrix,
                       compose_forward([flip, damp]).matrix)


def test_superop_adjoint_is_unital_and_dual(rng):
    channel = channel_of(depolarizing_kraus(0.3))
    assert np.allclose(channel.adjoint().apply(np.eye(2)), np.eye(2))
    state = random_state(2, rng).mat
    effect = random_state(2, rng).mat
    assert hs_inner(channel.apply(state), effect) == pytest.approx(
        hs_inner(state, channel.adjoint().apply(effect)))


def test_power_matches_repeated_composition():
    channel = channel_of(amplitude_damping_kraus(0.2))
    assert np.allclose(channel.power(3).matrix,
                       channel.compose(channel).compose(channel).matrix)
    assert np.allclose(SuperOp.identity(2).compose(channel).matrix,
                       channel.matrix)


def test_fixed_point_and_unit_eigenvalues():
    depol = channel_of(depolarizing_kraus(0.4))
    assert depol.unit_eigenvalue_count() == 1
    assert np.allclose(depol.fixed_point().mat, np.eye(2) / 2, atol=1e-12)
    assert depol.spectral_gap() == pytest.approx(0.4)
    damp = channel_of(amplitude_damping_kraus(0.5))
    assert np.allclose(damp.fixed_point().mat, np.diag([1, 0]), atol=1e-12)
    assert channel_of(projective_kraus()).unit_eigenvalue_count() == 2


def test_word_operator_order():
    first = KrausSet([np.array([[0, 1], [0, 0]]), np.array([[1, 0], [0, 0]])],
                     labels=['a', 'b'])
    second = KrausSet([np.array([[1, 0], [0, 0]]), np.array([[0, 0], [1, 0]])],
                      labels=['a', 'b'])
    oper = word_operator([first, second], ['a', 'b'])
    assert np.allclose(oper, second.op('b') @ first.op('a'))


def test_rotation_unitary_is_unitary():
    for axis in ('x', 'y', 'z'):
        unitary = rotation_unitary(2, axis, 0.8)
        assert np.allclose(unitary @ unitary.conj().T, np.eye(2))
    diag = rotation_unitary(3, 'diag', 1.2)
    assert np.allclose(diag @ diag.conj().T, np.eye(3))


def test_unknown_family():
    with pytest.raises(EnvironmentConfigError) as err:
        kraus_family('nope')
    assert "unknown Kraus family 'nope'" in str(err.value)


def test_parametric_family_keeps_alphabet():
    family = ParametricFamily('modulated_depolarizing', p0=0.5,
                              amplitude=0.2)
    family.validate(np.linspace(0, 1, 16, endpoint=False))
    assert family.alphabet == ('I', 'X', 'Y', 'Z')
    with pytest.raises(EnvironmentConfigError):
        ParametricFamily('modulated_depolarizing', p0=0.1, amplitude=0.2)


def test_modulated_depolarizing_spans_the_depolarizing_range():
    family = ParametricFamily('modulated_depolarizing', p0=1.0,
                              amplitude=0.3)
    coords = np.linspace(0, 1, 16, endpoint=False)
    family.validate(coords)
    assert max(kraus_validate(family(coord)).residual
               for coord in coords) <= 1e-10
    with pytest.raises(EnvironmentConfigError) as err:
        ParametricFamily('modulated_depolarizing', p0=1.2, amplitude=0.2)
    assert 'must stay in [0, 4/3]' in str(err.value)
