"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for errors raised by finslerarea."""


class MetricDomainError(FinslerError, ValueError):
    """A metric or integrand was evaluated outside its domain."""


class SingularIntegrandError(FinslerError, ArithmeticError):
    """Quadrature hit a non-finite or non-positive integrand value."""


class NotFinslerError(FinslerError):
    """The metric violates positivity on the sphere."""


class ScanInconsistentError(FinslerError):
    """Verdicts of a threshold scan are not monotone in |b|."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table or []


class MeshDegenerationError(FinslerError):
    """A triangle collapsed during the Plateau descent."""

    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class ConfigurationError(FinslerError, ValueError):
    """Invalid run configuration or input file."""
