""" State assignments omega -> theta_omega

Initial states, seed states of the stationary solver, and the states the
annealed measure integrates against are all random states: one density
matrix per environment point. Finite environments also expose
``symbol_weights``, the matrices E[1{x_0 = s} theta_omega] that exact
integration needs.
"""
import numpy as np

from .exceptions import EnvironmentConfigError
from .matrixcore import QuantumState
from .util import repr_str


class StateAssignment(object):
    """ Base class for omega -> theta_omega """
    def state_at(self, env, point):
        """ theta at ``point`` """
        raise NotImplementedError("Must override state_at")

    def symbol_weights(self, env):
        """ Stacked E[1{x_0 = s} theta_omega], one d x d matrix per symbol s
        of a finite environment
        """
        raise NotImplementedError("Must override symbol_weights")

    def describe(self):
        """ Short text for report metadata """
        return self.__class__.__name__


class FixedState(StateAssignment):
    """ The same state at every point

    Examples:

      >>> from .environment import EnvSystem, FinitePoint
      >>> from .families import depolarizing_kraus
      >>> env = EnvSystem.periodic([depolarizing_kraus(0.1)] * 2)
      >>> fixed = FixedState(QuantumState.pure(2, 0))
      >>> fixed.state_at(env, FinitePoint(1)) is fixed.state
      True
      >>> fixed.symbol_weights(env)[:, 0, 0].real.tolist()
      [0.5, 0.5]
    """
    def __init__(self, state):
        self.state = state

    def __repr__(self):
        return repr_str(self, ('state',))

    def state_at(self, env, point):
        return self.state

    def symbol_weights(self, env):
        initial, _ = env.symbol_chain()
        return initial[:, None, None] * self.state.mat[None, :, :]

    def describe(self):
        return 'fixed(purity=%.6g)' % self.state.purity


class SymbolStates(StateAssignment):
    """ One state per environment symbol (finite kinds only) """
    def __init__(self, states):
        self.states = list(states)
        if not self.states:
            raise ValueError("Must give at least one state")

    def __repr__(self):
        return '<SymbolStates: %d states>' % len(self.states)

    def _check(self, env):
        if env.n_symbols is None or env.n_symbols != len(self.states):
            raise EnvironmentConfigError(
                "Got %d symbol states for an environment with %s symbols" % (
                    len(self.states), env.n_symbols,
                ),
                module='assignments',
            )

    def state_at(self, env, point):
        self._check(env)
        return self.states[env.symbol(point)]

    def symbol_weights(self, env):
        self._check(env)
        initial, _ = env.symbol_chain()
        return np.array([
            weight * state.mat for weight, state in zip(initial, self.states)
        ])

    def describe(self):
        return 'symbols(%d)' % len(self.states)
