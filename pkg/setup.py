#!/usr/bin/env python
from setuptools import setup


def parse_requirements(path):
    """ Pinned requirements from a pip-compile output file """
    with open(path) as handle:
        return [
            line.split('#', 1)[0].strip()
            for line in handle
            if line.split('#', 1)[0].strip()
        ]


setup(name="dqtraj",
      version="0.1.0",
      description="Quantum trajectories in disordered environments: "
                  "simulation and ergodic checks",
      packages=['dqtraj'],
      install_requires=parse_requirements('requirements.txt'),
      entry_points={
          'console_scripts': ['dqtraj=dqtraj.cli:main'],
      },
)
