#!/usr/bin/env python
"""
A small example that measures a qubit with a depolarizing Kraus set whose
strength follows a two-state Markov chain, checks that the stationary state
is unique, then compares sampled outcome frequencies with their annealed
targets
"""
import logging

from dqtraj.assignments import FixedState
from dqtraj.environment import EnvSystem
from dqtraj.ergodics import dyn_erg_certify, verify_lln_outcomes
from dqtraj.families import depolarizing_kraus
from dqtraj.matrixcore import QuantumState

SEED = 20240101

env = EnvSystem.markov(
    [depolarizing_kraus(0.4), depolarizing_kraus(0.2)],
    [[0.7, 0.3], [0.45, 0.55]],
)

logging.basicConfig(level=logging.INFO)

report = dyn_erg_certify(env, master_seed=SEED)
for row in report.rows:
    logging.info("%s = %.3g (%s)", row.quantity, row.value,
                 'PASS' if row.passed else 'FAIL')

if report.passed:
    for label in env.alphabet:
        lln = verify_lln_outcomes(
            env, [label], trajectories=50, steps=2000, seed=SEED,
            assignment=FixedState(QuantumState.pure(2, 0)),
        )
        logging.info("%s: mean %.4f, target %.4f, z %.2f", label, lln.mean,
                     lln.target, lln.z)
else:
    logging.error("Not certified; frequencies have no common target")
