import io

import numpy as np
import pytest

from dqtraj.assignments import FixedState
from dqtraj.environment import EnvSystem, FinitePoint
from dqtraj.exceptions import InvalidPatternError, NullBranchingError
from dqtraj.families import amplitude_damping_kraus, projective_kraus
from dqtraj.matrixcore import QuantumState
from dqtraj.measures import quenched_cylinder
from dqtraj.rng import Purpose, derive_seed, stream
from dqtraj.trajectory import (
    FixedOmega,
    ResampleOmega,
    TrajectoryRecord,
    sample_batch,
    sample_trajectory,
    write_trajectories_csv,
    write_trajectories_npz,
)


def test_step_probabilities_follow_chain_rule(any_env):
    state = QuantumState.pure(any_env.dim, 0)
    for index in range(150):
        rng = stream(21, Purpose.instance, index)
        point = any_env.sample_invariant(rng)
        steps = int(rng.integers(1, 21))
        record = sample_trajectory(any_env, point, state, steps,
                                   derive_seed(21, Purpose.trajectory, index))
        assert record.steps == steps
        assert record.word_probability() == pytest.approx(
            quenched_cylinder(any_env, point, state, record.outcomes),
            abs=1e-10)


def test_states_are_kept_and_valid(amplitude_periodic):
    record = sample_trajectory(amplitude_periodic, FinitePoint(0),
                               QuantumState.maximally_mixed(2), 10, seed=4,
                               keep_states=True)
    assert len(record.states) == 11
    for state in record.states:
        assert np.trace(state.mat).real == pytest.approx(1.0)


def test_same_seed_same_trajectory(markov_depol):
    point = markov_depol.sample_invariant(stream(5, Purpose.anchor, 0))
    state = QuantumState.pure(2, 1)
    first = sample_trajectory(markov_depol, markov_depol.copy_point(point),
                              state, 50, seed=123)
    second = sample_trajectory(markov_depol, markov_depol.copy_point(point),
                               state, 50, seed=123)
    assert first.outcomes == second.outcomes
    assert np.array_equal(first.step_probs, second.step_probs)


def test_null_branching_raises():
    env = EnvSystem.constant(amplitude_damping_kraus(1.0))
    # only the decay branch can fire from |1>, then only '0' from |0>
    record = sample_trajectory(env, FinitePoint(0), QuantumState.pure(2, 1),
                               3, seed=1)
    assert record.outcomes == ['1', '0', '0']
    with pytest.raises(ValueError):
        sample_trajectory(env, FinitePoint(0), QuantumState.pure(2, 1), 0,
                          seed=1)


def test_null_state_after_projection_is_reported():
    env = EnvSystem.constant(projective_kraus())
    zero = np.zeros((2, 2))
    with pytest.raises(NullBranchingError):
        sample_trajectory(env, FinitePoint(0), zero, 1, seed=1)


@pytest.mark.parametrize('omega_mode', ['fixed', 'resample'])
def test_batches_ignore_thread_count(periodic_depol, omega_mode):
    mode = ResampleOmega() if omega_mode == 'resample' else \
        FixedOmega(FinitePoint(1))
    assignment = FixedState(QuantumState.pure(2, 0))
    serial = sample_batch(periodic_depol, assignment, 30, 12, 99, mode)
    pooled = sample_batch(periodic_depol, assignment, 30, 12, 99, mode,
                          threads=4)
    assert [rec.outcomes for rec in serial.records] == \
        [rec.outcomes for rec in pooled.records]
    assert [rec.seed for rec in serial.records] == \
        [rec.seed for rec in pooled.records]
    assert serial.omega_mode == omega_mode


def test_resampled_start_points(markov_depol):
    batch = sample_batch(markov_depol, FixedState(QuantumState.pure(2, 0)),
                         5, 4, 7, ResampleOmega())
    starts = [record.env_start.sequence for record in batch.records]
    assert len(set(id(seq) for seq in starts)) == 4
    assert batch.errors == {}
    assert len(batch.completed) == 4


def test_fixed_omega_shares_the_environment(markov_depol):
    point = markov_depol.sample_invariant(stream(8, Purpose.anchor, 0))
    batch = sample_batch(markov_depol, FixedState(QuantumState.pure(2, 0)),
                         40, 3, 7, FixedOmega(point))
    for record in batch.records:
        assert markov_depol.symbols(record.env_start, 0, 40) == \
            markov_depol.symbols(point, 0, 40)


def test_batch_collects_errors():
    env = EnvSystem.constant(projective_kraus())
    batch = sample_batch(env, FixedState(np.zeros((2, 2))), 3, 2, 1,
                         FixedOmega(FinitePoint(0)))
    assert sorted(batch.errors) == [0, 1]
    assert batch.completed == []
    assert isinstance(batch.errors[0], NullBranchingError)


def test_pattern_frequencies():
    record = TrajectoryRecord(None, 0, ['a', 'b'], [0, 1, 0, 1, 0, 1],
                              [1.0] * 6)
    assert record.pattern_frequency(['a', 'b']) == pytest.approx(3 / 6.0)
    assert record.pattern_frequency(['a']) == pytest.approx(3 / 6.0)
    assert record.pattern_count(['b', 'a']) == 2
    assert record.block_frequencies(['a'], 2).tolist() == [2 / 3.0, 1 / 3.0]
    with pytest.raises(InvalidPatternError):
        record.pattern_frequency(['c'])
    with pytest.raises(InvalidPatternError):
        record.pattern_frequency([])
    with pytest.raises(InvalidPatternError):
        record.pattern_frequency(['a'] * 7)


def test_csv_layout(constant_depol):
    batch = sample_batch(constant_depol, FixedState(QuantumState.pure(2, 0)),
                         3, 2, 5, FixedOmega(FinitePoint(0)))
    out = io.StringIO()
    write_trajectories_csv(batch, out, {'config_hash': 'abc'})
    lines = out.getvalue().splitlines()
    assert lines[0] == '# config_hash=abc,master_seed=5,omega_mode=fixed'
    assert lines[1] == 'trajectory_id,n,outcome,step_prob'
    assert len(lines) == 2 + 2 * 3
    ids = [line.split(',')[0] for line in lines[2:]]
    assert ids == ['0', '0', '0', '1', '1', '1']
    for line, record_step in zip(lines[2:5], batch.records[0].step_probs):
        assert float(line.split(',')[3]) == record_step


def test_npz_dump(tmp_path, constant_depol):
    batch = sample_batch(constant_depol, FixedState(QuantumState.pure(2, 0)),
                         6, 3, 5, ResampleOmega())
    path = str(tmp_path / 'trajectories.npz')
    write_trajectories_npz(batch, path)
    data = np.load(path)
    assert data['outcomes'].shape == (3, 6)
    assert data['alphabet'].tolist() == ['I', 'X', 'Y', 'Z']
    assert int(data['master_seed']) == 5
