""" Custom exceptions from dqtraj """


class DqtrajError(Exception):
    """ Base for all errors raised by dqtraj

    Messages are tagged with the module that raised them

    Examples:

      >>> str(DqtrajError('bad thing', module='channels'))
      '[channels] bad thing'
      >>> str(DqtrajError('bad thing'))
      'bad thing'
    """
    default_module = None

    def __init__(self, message, module=None):
        self.message = message
        self.module = module if module is not None else self.default_module
        super(DqtrajError, self).__init__(message)

    def __str__(self):
        if self.module is None:
            return self.message
        return '[%s] %s' % (self.module, self.message)


class DimensionError(DqtrajError):
    """ Raised when matrix shapes don't agree, or exceed the supported size """
    default_module = 'matrixcore'


class InvalidStateError(DqtrajError):
    """ Raised when a matrix isn't a valid density matrix """
    default_module = 'matrixcore'


class NullStateError(DqtrajError):
    """ Raised when PSD repair leaves no trace to normalize """
    default_module = 'matrixcore'

    def __init__(self, message='numerically null state', module=None):
        super(NullStateError, self).__init__(message, module)


class UnknownLabelError(DqtrajError):
    """ Raised when an outcome label isn't in the alphabet """
    default_module = 'channels'


class InvalidKrausError(DqtrajError):
    """ Raised when a Kraus set fails the stochasticity condition """
    default_module = 'channels'


class InvalidPatternError(DqtrajError, ValueError):
    """ Raised for empty words, cylinders starting before 1, and patterns
    that don't fit the trajectory or alphabet """
    default_module = 'measures'


class NullBranchingError(DqtrajError):
    """ Raised when every branch of a trajectory step has vanishing
    probability """
    default_module = 'trajectory'

    def __init__(self, message='numerically null branching', module=None):
        super(NullBranchingError, self).__init__(message, module)


class EnvironmentConfigError(DqtrajError):
    """ Raised when environment parameters are inconsistent """
    default_module = 'environment'


class QuadratureUnavailableError(DqtrajError):
    """ Raised when exact integration is requested for a torus environment
    """
    default_module = 'measures'

    def __init__(self, message='quadrature unavailable; use mc', module=None):
        super(QuadratureUnavailableError, self).__init__(message, module)


class EnumerationBudgetError(DqtrajError):
    """ Raised when an exhaustive enumeration would exceed its budget """
    default_module = 'measures'


class UnconvergedError(DqtrajError):
    """ Raised when a stationary state is needed but the solver didn't
    converge """
    default_module = 'ergodics'


class DynErgError(DqtrajError):
    """ Raised when dynamical ergodicity is required but not certified """
    default_module = 'ergodics'


class ConfigError(DqtrajError):
    """ Raised with every problem found while validating a config file

    Examples:

      >>> err = ConfigError(['dimension: must be positive', 'seed: missing'])
      >>> print(err)
      [config] 2 validation errors:
        dimension: must be positive
        seed: missing
    """
    default_module = 'config'

    def __init__(self, errors, module=None):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        message = '%d validation error%s:\n%s' % (
            len(self.errors),
            '' if len(self.errors) == 1 else 's',
            '\n'.join('  %s' % err for err in self.errors),
        )
        super(ConfigError, self).__init__(message, module)
