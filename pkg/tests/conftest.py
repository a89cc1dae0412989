import os

import numpy as np
import pytest

from dqtraj.environment import EnvSystem
from dqtraj.families import (
    ParametricFamily,
    amplitude_damping_kraus,
    depolarizing_kraus,
    kraus_family,
    projective_kraus,
)


FIXTURES_DIR = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), 'fixtures')


@pytest.fixture
def fixture_path():
    def path(name):
        return os.path.join(FIXTURES_DIR, name)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def constant_depol():
    return EnvSystem.constant(depolarizing_kraus(0.4))


@pytest.fixture
def periodic_depol():
    return EnvSystem.periodic([
        kraus_family('depolarizing', p=0.4,
                     rotate={'axis': 'x', 'angle': 0.7}),
        kraus_family('depolarizing', p=0.2,
                     rotate={'axis': 'y', 'angle': 1.1}),
    ])


@pytest.fixture
def markov_depol():
    return EnvSystem.markov(
        [depolarizing_kraus(0.4), depolarizing_kraus(0.2)],
        [[0.7, 0.3], [0.45, 0.55]],
    )


@pytest.fixture
def iid_depol():
    return EnvSystem.iid(
        [depolarizing_kraus(0.1), depolarizing_kraus(0.4),
         depolarizing_kraus(0.8)],
        [0.5, 0.3, 0.2],
    )


@pytest.fixture
def torus_rotation():
    return EnvSystem.quasiperiodic(ParametricFamily(
        'rotated', base={'family': 'depolarizing', 'p': 0.3}, axis='y',
    ))


@pytest.fixture
def amplitude_periodic():
    return EnvSystem.periodic([
        amplitude_damping_kraus(0.7),
        kraus_family('amplitude_damping', gamma=0.7,
                     rotate={'axis': 'y', 'angle': np.pi / 2}),
    ])


@pytest.fixture
def projective_constant():
    return EnvSystem.constant(projective_kraus())


@pytest.fixture
def amplitude_markov():
    """ Small alphabet, non-unital fibers, memory in the environment """
    return EnvSystem.markov(
        [amplitude_damping_kraus(0.3),
         kraus_family('amplitude_damping', gamma=0.6,
                      rotate={'axis': 'x', 'angle': 0.9})],
        [[0.2, 0.8], [0.6, 0.4]],
    )


@pytest.fixture(params=[
    'constant_depol', 'periodic_depol', 'markov_depol', 'iid_depol',
    'torus_rotation', 'amplitude_periodic', 'amplitude_markov',
])
def any_env(request):
    return request.getfixturevalue(request.param)


@pytest.fixture(params=[
    'constant_depol', 'periodic_depol', 'markov_depol', 'iid_depol',
    'amplitude_periodic', 'amplitude_markov',
])
def finite_env(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def constant_amplitude():
    return EnvSystem.constant(amplitude_damping_kraus(0.4))


@pytest.fixture
def iid_amplitude():
    return EnvSystem.iid(
        [amplitude_damping_kraus(0.2),
         kraus_family('amplitude_damping', gamma=0.5,
                      rotate={'axis': 'y', 'angle': 0.8})],
        [0.6, 0.4],
    )


@pytest.fixture
def torus_amplitude():
    return EnvSystem.quasiperiodic(ParametricFamily(
        'rotated', base={'family': 'amplitude_damping', 'gamma': 0.4},
        axis='x',
    ))


@pytest.fixture
def projective_qutrit():
    return EnvSystem.constant(projective_kraus(3))


@pytest.fixture(params=[
    'constant_amplitude', 'amplitude_periodic', 'iid_amplitude',
    'amplitude_markov', 'torus_amplitude', 'projective_qutrit',
])
def small_alphabet_env(request):
    """ One environment of every kind with at most three outcomes """
    return request.getfixturevalue(request.param)
