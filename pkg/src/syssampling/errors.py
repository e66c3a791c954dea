"""Exception hierarchy shared by every module."""


class SamplingError(Exception):
    """Base class for all package errors."""


class DataError(SamplingError, ValueError):
    """Input data is malformed or violates a design precondition."""


class DegenerateVariateError(DataError):
    """A variate has zero variance (or zero mean), so its CV is undefined."""


class NumericalError(SamplingError, ArithmeticError):
    """An estimator or solver left its numerical domain."""


class SingularSystemError(NumericalError):
    """The normal equations for the optimal constants are singular."""
