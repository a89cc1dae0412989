import numpy as np
import pytest

from dqtraj.assignments import FixedState
from dqtraj.channels import compose_forward
from dqtraj.environment import EnvSystem, FinitePoint
from dqtraj.ergodics import (
    SOLVER_TOL_EXACT,
    SOLVER_TOL_STOCHASTIC,
    StationaryAssignment,
    bonferroni_z,
    default_tol,
    dyn_erg_certify,
    lln_target,
    stationary_profile,
    stationary_state,
    stationary_weights,
    sigma_invariance_check,
    verify_annealed_lln,
    verify_lln_outcomes,
    verify_observable_average,
    verify_quenched_ergodic,
)
from dqtraj.exceptions import (
    DynErgError,
    QuadratureUnavailableError,
    UnconvergedError,
)
from dqtraj.families import amplitude_damping_kraus
from dqtraj.matrixcore import QuantumState, trace_distance
from dqtraj.measures import CylinderSet
from dqtraj.trajectory import FixedOmega


def test_default_tolerances(constant_depol, markov_depol, iid_depol,
                            torus_rotation):
    assert default_tol(constant_depol) == SOLVER_TOL_EXACT
    assert default_tol(torus_rotation) == SOLVER_TOL_EXACT
    assert default_tol(markov_depol) == SOLVER_TOL_STOCHASTIC
    assert default_tol(iid_depol) == SOLVER_TOL_STOCHASTIC


def test_bonferroni_threshold_grows():
    assert bonferroni_z(1) == pytest.approx(3.0)
    assert bonferroni_z(2) < bonferroni_z(10) < bonferroni_z(100)


def test_depolarizing_stationary_state(constant_depol):
    state, diag = stationary_state(constant_depol, FinitePoint(0),
                                   QuantumState.pure(2, 1))
    assert diag.converged
    assert diag.residual <= 1e-10
    assert np.allclose(state.mat, np.eye(2) / 2, atol=1e-10)
    assert diag.history[-1][0] == diag.iterations


def test_periodic_stationary_state_matches_period_channel(periodic_depol):
    oracle = compose_forward([periodic_depol.fibers[1],
                              periodic_depol.fibers[0]]).fixed_point()
    state, diag = stationary_state(periodic_depol, FinitePoint(0))
    assert diag.converged
    assert np.allclose(state.mat, oracle.mat, atol=1e-8)


def test_stationary_states_follow_the_orbit(amplitude_periodic):
    first, _ = stationary_state(amplitude_periodic, FinitePoint(0))
    second, _ = stationary_state(amplitude_periodic, FinitePoint(1))
    pushed = compose_forward([amplitude_periodic.fibers[1]]).apply(first)
    assert trace_distance(pushed, second) < 1e-8


def test_projective_keeps_diagonal_seed(projective_constant):
    seed = QuantumState(np.diag([0.3, 0.7]))
    state, diag = stationary_state(projective_constant, FinitePoint(0), seed)
    assert diag.converged
    assert np.allclose(state.mat, seed.mat, atol=1e-12)


def test_unconverged_solve_is_flagged():
    env = EnvSystem.constant(amplitude_damping_kraus(0.01))
    _, diag = stationary_state(env, FinitePoint(0), QuantumState.pure(2, 1),
                               max_iter=4)
    assert not diag.converged
    assert diag.iterations == 4
    with pytest.raises(UnconvergedError):
        StationaryAssignment(max_iter=4).state_at(env, FinitePoint(0))
    state = StationaryAssignment(max_iter=4, override=True).state_at(
        env, FinitePoint(0))
    assert state.dim == 2


def test_stationary_solver_arguments(constant_depol):
    with pytest.raises(ValueError):
        stationary_state(constant_depol, FinitePoint(0), tol=0)
    with pytest.raises(ValueError):
        stationary_state(constant_depol, FinitePoint(0), max_iter=1)
    with pytest.raises(TypeError):
        stationary_state(constant_depol, FinitePoint(0), seed='I/2')


def test_stationary_weights_of_periodic(amplitude_periodic):
    solved = stationary_weights(amplitude_periodic)
    assert solved.unique
    for sym in range(2):
        state, _ = stationary_state(amplitude_periodic, FinitePoint(sym))
        assert np.allclose(2 * solved.weights[sym], state.mat, atol=1e-8)


def test_stationary_weights_unavailable_on_torus(torus_rotation):
    with pytest.raises(QuadratureUnavailableError):
        stationary_weights(torus_rotation)


def test_stationary_assignment_caches(periodic_depol):
    stationary = StationaryAssignment()
    first = stationary.state_at(periodic_depol, FinitePoint(1))
    assert stationary.state_at(periodic_depol, FinitePoint(1)) is first
    assert stationary.describe() == 'stationary'


def test_stationary_profile_on_torus(torus_rotation):
    profile = stationary_profile(torus_rotation, anchors=3, master_seed=4)
    assert profile.converged
    assert len(profile.states) == 3
    assert profile.residual < SOLVER_TOL_EXACT


@pytest.mark.parametrize('name', [
    'constant_depol', 'periodic_depol', 'markov_depol',
])
def test_certifier_passes_on_ergodic_environments(request, name):
    env = request.getfixturevalue(name)
    report = dyn_erg_certify(env, master_seed=20240101)
    assert report.passed, [row.as_tuple() for row in report.rows]
    assert report.separating_pair is None


def test_certifier_fails_on_projective(projective_constant):
    report = dyn_erg_certify(projective_constant)
    assert not report
    assert report.separating_pair[3] >= 0.5
    assert report.unit_eigenvalues == 2
    failing = [row.quantity for row in report.rows if not row.passed]
    assert 'max_pair_distance' in failing
    assert 'unit_eigenvalues' in failing


def test_certifier_needs_two_anchors_and_seeds(constant_depol):
    with pytest.raises(ValueError):
        dyn_erg_certify(constant_depol, anchors=1)
    with pytest.raises(ValueError):
        dyn_erg_certify(constant_depol, seeds=1)


def test_lln_on_constant_depolarizing(constant_depol):
    report = verify_lln_outcomes(
        constant_depol, ['I'], trajectories=50, steps=2000, seed=20240101,
        assignment=FixedState(QuantumState.pure(2, 0)),
    )
    assert report.target == pytest.approx(0.7)
    assert report.trajectories == 50
    assert report.passed, report.row()


def test_lln_target_of_markov_depolarizing(markov_depol):
    target = lln_target(markov_depol, ['I'])
    assert target.mode == 'exact'
    assert target.value == pytest.approx(0.6 * 0.7 + 0.4 * 0.85)


def test_lln_with_fixed_start_point(amplitude_markov):
    point = amplitude_markov.sample_invariant(np.random.default_rng(3))
    report = verify_lln_outcomes(
        amplitude_markov, ['0', '1'], trajectories=20, steps=3000, seed=5,
        omega_mode=FixedOmega(point),
    )
    assert report.omega_mode == 'fixed'
    assert report.passed, report.row()


def test_lln_frequencies_forget_the_initial_state(amplitude_periodic):
    means = [
        verify_lln_outcomes(
            amplitude_periodic, ['1'], trajectories=30, steps=1000, seed=8,
            assignment=FixedState(state),
        )
        for state in (QuantumState.pure(2, 0), QuantumState.pure(2, 1))
    ]
    stderr = np.hypot(means[0].stderr, means[1].stderr)
    assert abs(means[0].mean - means[1].mean) <= \
        bonferroni_z(1) * stderr + 1e-12
    assert means[0].target == means[1].target


def test_lln_requires_certification(projective_constant):
    with pytest.raises(DynErgError):
        verify_lln_outcomes(projective_constant, ['0'], 2, 5, seed=1)


def test_annealed_lln_converges_on_periodic(amplitude_periodic):
    table = verify_annealed_lln(
        amplitude_periodic, FixedState(QuantumState.maximally_mixed(2)),
        CylinderSet(['0']), max_n=1000,
    )
    assert table.max_n == 1000
    assert table.final_gap <= 1e-3
    assert table.passed
    gaps = table.checkpoint_gaps()
    assert gaps[-1] < gaps[0]
    assert len(table.rows()) == 1000


def test_annealed_lln_from_stationary_weights(amplitude_periodic):
    stationary = StationaryAssignment()
    table = verify_annealed_lln(
        amplitude_periodic, stationary, CylinderSet(['1', '0']),
        env_event=[1], max_n=50, target_assignment=stationary,
    )
    assert np.max(table.term_gaps) <= 1e-9


def test_annealed_lln_gap_shrinks_strictly():
    env = EnvSystem.constant(amplitude_damping_kraus(0.2))
    table = verify_annealed_lln(env, FixedState(QuantumState.pure(2, 1)),
                                CylinderSet(['1']), max_n=64)
    gaps = table.checkpoint_gaps()
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))


def test_annealed_lln_unavailable_on_torus(torus_rotation):
    with pytest.raises(QuadratureUnavailableError):
        verify_annealed_lln(torus_rotation,
                            FixedState(QuantumState.maximally_mixed(2)),
                            CylinderSet(['I']))


def test_sigma_invariance(finite_env):
    word = [finite_env.alphabet[-1], finite_env.alphabet[0]]
    assert sigma_invariance_check(finite_env, CylinderSet(word)) <= 1e-8


def test_observable_average_on_periodic(amplitude_periodic):
    report = verify_observable_average(
        amplitude_periodic, FinitePoint(0), QuantumState.pure(2, 1),
        np.diag([1, 0]), steps=2000,
    )
    assert report.passed, report


def test_observable_needs_matrices_on_finite(constant_depol):
    with pytest.raises(ValueError):
        verify_observable_average(constant_depol, FinitePoint(0),
                                  QuantumState.pure(2, 0),
                                  lambda point: np.eye(2), steps=3)


def test_quenched_ergodic_on_markov(markov_depol):
    report = verify_quenched_ergodic(
        markov_depol, ['I'], omegas=2, trajectories=30, steps=1000,
        master_seed=11,
    )
    assert len(report.cells) == 4
    # 4 cells against the target plus 6 pairs
    assert len(report.comparisons) == 10
    assert report.threshold == pytest.approx(bonferroni_z(10))
    assert report.passed, report.comparisons


def test_quenched_ergodic_fails_on_projective(projective_constant):
    report = verify_quenched_ergodic(
        projective_constant, ['0'], omegas=1, trajectories=20, steps=50,
        override=True,
    )
    assert not report.passed
    assert report.target.value == pytest.approx(0.5)
