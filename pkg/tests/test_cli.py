import json
import os

import pytest
import yaml

from click.testing import CliRunner

from dqtraj.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main
from dqtraj.config import load_config
from dqtraj.exceptions import EnumerationBudgetError
from dqtraj.experiments import EXPERIMENT_NAMES, RUNNERS, run


FIXTURE_NAMES = [
    'amplitude_periodic.yaml',
    'depolarizing_constant.yaml',
    'depolarizing_iid.yaml',
    'depolarizing_markov.yaml',
    'depolarizing_periodic.yaml',
    'projective_control.yaml',
    'rotation_quasiperiodic.yaml',
]


def _write_config(tmp_path, name='config.yaml', **overrides):
    raw = {
        'dimension': 2,
        'environment': {
            'kind': 'periodic',
            'fibers': [
                {'family': 'depolarizing', 'p': 0.4,
                 'rotate': {'axis': 'x', 'angle': 0.7}},
                {'family': 'depolarizing', 'p': 0.2,
                 'rotate': {'axis': 'y', 'angle': 1.1}},
            ],
        },
        'experiment': 'simulate',
        'seed': 20240101,
        'params': {'trajectories': 6, 'steps': 30},
    }
    raw.update(overrides)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def _invoke(*args, **kwargs):
    return CliRunner().invoke(main, [str(arg) for arg in args], **kwargs)


def _manifest(out_dir):
    with open(os.path.join(str(out_dir), 'manifest.json')) as handle:
        return json.load(handle)


def test_every_experiment_has_a_command():
    commands = set(main.commands)
    assert set(EXPERIMENT_NAMES) <= commands
    assert 'run' in commands


@pytest.mark.parametrize('name', FIXTURE_NAMES)
def test_validate_fixtures(fixture_path, tmp_path, name):
    result = _invoke('validate', '--config', fixture_path(name),
                     '--out', tmp_path)
    assert result.exit_code == EXIT_PASS, result.output
    assert result.output.strip().endswith('PASS')
    assert os.path.exists(str(tmp_path / 'validate.csv'))
    assert _manifest(tmp_path)['experiment'] == 'validate'


def test_lln_passes(tmp_path):
    config = _write_config(
        tmp_path, environment={
            'kind': 'constant',
            'fiber': {'family': 'depolarizing', 'p': 0.4},
        }, experiment='lln',
        params={'trajectories': 20, 'steps': 500, 'patterns': [['I']]},
    )
    out = tmp_path / 'out'
    result = _invoke('lln', '--config', config, '--out', out)
    assert result.exit_code == EXIT_PASS, result.output
    with open(str(out / 'lln.csv')) as handle:
        lines = handle.read().splitlines()
    assert lines[1].split(',')[0] == 'pattern'
    assert lines[2].startswith('I,20,500,')
    assert lines[2].endswith('PASS')


def test_certify_projective_fails(fixture_path, tmp_path):
    result = _invoke('certify', '--config',
                     fixture_path('projective_control.yaml'),
                     '--out', tmp_path)
    assert result.exit_code == EXIT_FAIL, result.output
    assert _manifest(tmp_path)['status'] == 'FAIL'
    with open(str(tmp_path / 'certify.csv')) as handle:
        body = handle.read()
    assert 'max_pair_distance' in body
    assert 'FAIL' in body


def test_module_error_exits_2(tmp_path):
    config = _write_config(tmp_path, experiment='shift-check',
                           params={'shift': 12})
    out = tmp_path / 'out'
    result = _invoke('run', '--config', config, '--out', out)
    assert result.exit_code == EXIT_ERROR
    assert 'error:' in result.output
    assert _manifest(out)['status'] == 'ERROR'


def test_config_error_exits_2(tmp_path):
    config = _write_config(tmp_path, dimension=3)
    result = _invoke('simulate', '--config', config, '--out', tmp_path)
    assert result.exit_code == EXIT_ERROR
    assert 'dimension: 3 but the environment acts on 2' in result.output


def test_bad_seed_is_a_usage_error(tmp_path):
    config = _write_config(tmp_path)
    result = _invoke('simulate', '--config', config, '--seed=-1')
    assert result.exit_code == 2
    assert 'Seed must be in' in result.output


def test_outputs_ignore_thread_count(tmp_path):
    config = _write_config(tmp_path)
    bodies = []
    for threads in (1, 4):
        out = tmp_path / ('threads%d' % threads)
        result = _invoke('simulate', '--config', config, '--out', out,
                         '--threads', threads)
        assert result.exit_code == EXIT_PASS, result.output
        with open(str(out / 'trajectories.csv')) as handle:
            bodies.append(handle.read())
        assert _manifest(out)['threads'] == threads
    assert bodies[0] == bodies[1]


def test_seed_flag_and_thread_env(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / 'out'
    result = _invoke('run', '--config', config, '--out', out,
                     '--seed', '18446744073709551615',
                     env={'DQTRAJ_THREADS': '3'})
    assert result.exit_code == EXIT_PASS, result.output
    manifest = _manifest(out)
    assert manifest['seed'] == '18446744073709551615'
    assert manifest['threads'] == 3
    assert manifest['experiment'] == 'simulate'
    assert manifest['artifacts'] == ['trajectories.csv']
    with open(str(out / 'trajectories.csv')) as handle:
        first = handle.readline()
    assert 'seed=18446744073709551615' in first


def test_run_api_records_error_manifest(tmp_path):
    config = load_config(_write_config(tmp_path, experiment='shift-check',
                                       params={'shift': 12}))
    with pytest.raises(EnumerationBudgetError):
        run(config, out=str(tmp_path / 'out'))
    assert _manifest(tmp_path / 'out')['status'] == 'ERROR'


def test_run_api_experiment_override(tmp_path):
    config = load_config(_write_config(tmp_path, params={
        'instances': 3, 'shift': 2, 'cylinder': {'word': 'X.I'},
    }))
    status, paths = run(config, 'shift-check', out=str(tmp_path / 'out'))
    assert status == 'PASS'
    assert [os.path.basename(path) for path in paths] == \
        ['shift_check.csv', 'manifest.json']
    with open(paths[0]) as handle:
        lines = handle.read().splitlines()
    assert len(lines) == 2 + 3 + 1
    assert lines[-1].startswith('sigma_invariance,X.I,1,')


@pytest.mark.parametrize('experiment,params,message', [
    ('annealed-lln', {'cylinder': {'word': ['I'], 'start': 0}},
     'params.cylinder: start must be at least 1'),
    ('lln', {'patterns': ['']},
     'params.patterns: words must have at least one label'),
    ('lln', {'patterns': ['Q']},
     'params.patterns[0]: labels Q not in the alphabet'),
    ('lln', {'patterns': ['I.X.I'], 'steps': 2},
     'params.patterns[0]: 3 labels but only 2 steps'),
])
def test_bad_params_exit_2(tmp_path, experiment, params, message):
    config = _write_config(tmp_path, experiment=experiment, params=params)
    out = tmp_path / 'out'
    result = _invoke(experiment, '--config', config, '--out', out)
    assert result.exit_code == EXIT_ERROR, result.output
    assert message in result.output
    assert not os.path.exists(str(out))


def test_run_api_records_error_manifest_for_any_exception(tmp_path,
                                                          monkeypatch):
    def broken(ctx):
        raise RuntimeError('worker died')
    monkeypatch.setitem(RUNNERS, 'validate', broken)
    config = load_config(_write_config(tmp_path))
    with pytest.raises(RuntimeError):
        run(config, 'validate', out=str(tmp_path / 'out'))
    assert _manifest(tmp_path / 'out')['status'] == 'ERROR'


def test_validate_checks_words_up_to_length_8(fixture_path, tmp_path):
    result = _invoke('validate', '--config',
                     fixture_path('amplitude_periodic.yaml'),
                     '--out', tmp_path)
    assert result.exit_code == EXIT_PASS, result.output
    with open(str(tmp_path / 'validate.csv')) as handle:
        rows = [line.split(',') for line in handle.read().splitlines()[2:]]
    lengths = [row[0] for row in rows if row[0].startswith('normalization')]
    assert lengths == ['normalization_n%d' % n for n in range(1, 9)]
    assert all(row[-1] == 'PASS' for row in rows)


def test_lln_fixture_matches_closed_form_targets(fixture_path, tmp_path):
    config = load_config(fixture_path('depolarizing_constant.yaml'))
    status, paths = run(config, out=str(tmp_path), threads=4)
    with open(paths[0]) as handle:
        rows = [line.split(',') for line in handle.read().splitlines()[2:]]
    assert [row[0] for row in rows] == ['I', 'X', 'Y', 'Z']
    for row, target in zip(rows, (0.7, 0.1, 0.1, 0.1)):
        assert row[1:3] == ['200', '5000']
        assert float(row[5]) == pytest.approx(target, abs=1e-10)
        assert float(row[8]) == 3.0
        assert abs(float(row[7])) <= 3.0
    assert status == 'PASS'
