""" Run artifacts: CSV tables, plot data and the run manifest """
import csv
import datetime
import json
import logging
import os
import platform

import numpy as np
import scipy

from .util import repr_str, ts_setter


STATUS_PASS = 'PASS'
STATUS_FAIL = 'FAIL'
STATUS_ERROR = 'ERROR'


def package_versions():
    """ Versions of the packages that determine numerical results """
    from . import __version__
    return {
        'dqtraj': __version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'python': platform.python_version(),
    }


class RunManifest(object):
    """ Provenance of one run, written as ``manifest.json`` """
    def __init__(self, experiment, config_hash, seed, started_at=None,
                 threads=1, status=None, wall_time=None, artifacts=None,
                 versions=None, seeds=None):
        """
        :param started_at: start time; ISO8601 strings are parsed

        Examples:

          >>> manifest = RunManifest('lln', 'abc', 7,
          ...                        started_at='2024-01-01T12:00:00Z')
          >>> manifest
          <RunManifest: experiment=lln, seed=7, started_at=2024-01-01T12:00:00+00:00>
        """
        self.experiment = experiment
        self.config_hash = config_hash
        self.seed = seed
        self.started_at = started_at if started_at is not None else \
            datetime.datetime.now(datetime.timezone.utc)
        self.threads = threads
        self.status = status
        self.wall_time = wall_time
        self.artifacts = list(artifacts or [])
        self.versions = versions if versions is not None else \
            package_versions()
        self.seeds = dict(seeds or {})

    def __repr__(self):
        def updater(props):
            """ Add ``started_at`` as ISO8601 """
            props.append(('started_at', self.started_at.isoformat()))
            return props
        return repr_str(self, ('experiment', 'seed', 'status'), updater)

    _started_at = None

    @property
    def started_at(self):
        """ Start time, timezone aware """
        return self._started_at

    @started_at.setter
    @ts_setter
    def started_at(self, value):
        self._started_at = value

    def as_dict(self):
        """ JSON-able manifest; 64 bit seeds are written as strings """
        return {
            'experiment': self.experiment,
            'config_hash': self.config_hash,
            'seed': str(self.seed),
            'seeds': {key: str(value) for key, value in self.seeds.items()},
            'started_at': self.started_at.isoformat(),
            'wall_time': self.wall_time,
            'threads': self.threads,
            'status': self.status,
            'artifacts': self.artifacts,
            'versions': self.versions,
        }

    @classmethod
    def from_dict(cls, data):
        """ Inverse of ``as_dict``

        Examples:

          >>> manifest = RunManifest('certify', 'ff', 2 ** 64 - 1,
          ...                        started_at='2024-05-06T07:08:09Z')
          >>> back = RunManifest.from_dict(manifest.as_dict())
          >>> back.seed == 2 ** 64 - 1, back.started_at == manifest.started_at
          (True, True)
        """
        return cls(
            experiment=data['experiment'],
            config_hash=data['config_hash'],
            seed=int(data['seed']),
            started_at=data['started_at'],
            threads=data.get('threads', 1),
            status=data.get('status'),
            wall_time=data.get('wall_time'),
            artifacts=data.get('artifacts'),
            versions=data.get('versions'),
            seeds={key: int(value)
                   for key, value in data.get('seeds', {}).items()},
        )

    def write(self, out_dir):
        """ Write ``manifest.json`` into ``out_dir``; returns its path """
        path = os.path.join(out_dir, 'manifest.json')
        with open(path, 'w') as handle:
            json.dump(self.as_dict(), handle, indent=2, sort_keys=True)
            handle.write('\n')
        logging.info("Wrote %s", path)
        return path


def format_value(value):
    """ CSV cell text: floats with 17 significant digits

    Examples:

      >>> format_value(0.1)
      '0.10000000000000001'
      >>> format_value(3), format_value('PASS'), format_value(np.float64(2))
      ('3', 'PASS', '2')
      >>> format_value(True)
      'true'
    """
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return '%.17g' % value
    if value is None:
        return ''
    return str(value)


def metadata_line(metadata):
    """ ``# key=value,...`` with keys sorted

    Examples:

      >>> metadata_line({'seed': 7, 'config_hash': 'ab'})
      '# config_hash=ab,seed=7'
    """
    return '# ' + ','.join(
        '%s=%s' % (key, metadata[key]) for key in sorted(metadata)
    )


def write_rows(path, columns, rows, metadata):
    """ CSV with a metadata line, a header, then ``rows``

    :param metadata: must hold at least ``config_hash`` and ``seed``

    :raises ValueError: If a row has the wrong number of cells
    """
    with open(path, 'w') as handle:
        handle.write(metadata_line(metadata) + '\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("Row %r doesn't match columns %s" % (
                    row, ', '.join(columns),
                ))
            writer.writerow([format_value(value) for value in row])
    logging.info("Wrote %s", path)
    return path


PLOT_COLUMNS = ('series', 'x', 'y', 'yerr')


def write_plot(path, series, metadata):
    """ Long-format plot data

    :param dict series: name -> iterable of (x, y) or (x, y, yerr)
    """
    rows = []
    for name in sorted(series):
        for point in series[name]:
            x_val, y_val = point[0], point[1]
            yerr = point[2] if len(point) > 2 else None
            rows.append((name, x_val, y_val, yerr))
    return write_rows(path, PLOT_COLUMNS, rows, metadata)
