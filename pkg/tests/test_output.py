import json

import pytest

from dqtraj.output import (
    PLOT_COLUMNS,
    RunManifest,
    format_value,
    write_plot,
    write_rows,
)


METADATA = {'config_hash': 'c0ffee', 'seed': 12}


def test_write_rows(tmp_path):
    path = str(tmp_path / 'table.csv')
    write_rows(path, ('name', 'value', 'verdict'),
               [('a', 0.5, 'PASS'), ('b', 1 / 3.0, 'FAIL')], METADATA)
    with open(path) as handle:
        lines = handle.read().splitlines()
    assert lines == [
        '# config_hash=c0ffee,seed=12',
        'name,value,verdict',
        'a,0.5,PASS',
        'b,0.33333333333333331,FAIL',
    ]


def test_write_rows_checks_width(tmp_path):
    with pytest.raises(ValueError):
        write_rows(str(tmp_path / 'bad.csv'), ('a', 'b'), [(1,)], METADATA)


def test_write_plot_is_long_format(tmp_path):
    path = str(tmp_path / 'plot.csv')
    write_plot(path, {'zeta': [(1, 2.0)], 'alpha': [(1, 0.5, 0.1)]},
               METADATA)
    with open(path) as handle:
        lines = handle.read().splitlines()
    assert lines[1] == ','.join(PLOT_COLUMNS)
    assert lines[2] == 'alpha,1,0.5,0.10000000000000001'
    assert lines[3] == 'zeta,1,2,'


def test_format_value():
    assert format_value(None) == ''
    assert format_value(False) == 'false'
    assert float(format_value(0.1 + 0.2)) == 0.1 + 0.2


def test_manifest_file(tmp_path):
    manifest = RunManifest('lln', 'c0ffee', 2 ** 64 - 1,
                           started_at='2024-01-01T00:00:00Z', threads=4,
                           status='PASS', wall_time=1.5,
                           artifacts=['lln.csv'], seeds={'master': 3})
    path = manifest.write(str(tmp_path))
    with open(path) as handle:
        data = json.load(handle)
    assert data['seed'] == str(2 ** 64 - 1)
    assert data['seeds'] == {'master': '3'}
    assert data['status'] == 'PASS'
    assert data['artifacts'] == ['lln.csv']
    assert data['started_at'].startswith('2024-01-01T00:00:00')
    assert set(data['versions']) >= {'dqtraj', 'numpy', 'scipy', 'python'}
    assert RunManifest.from_dict(data).seed == 2 ** 64 - 1
