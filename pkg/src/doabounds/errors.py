"""Exception types raised by the bound and simulation code."""


class DoaBoundsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(DoaBoundsError, ValueError):
    """Operands have incompatible or non-square shapes."""


class NotPositiveDefinite(DoaBoundsError, ArithmeticError):
    """A matrix required to be Hermitian positive definite failed to factor."""


class SingularFisher(DoaBoundsError, ArithmeticError):
    """Fisher information matrix is numerically singular."""


class InvalidCrb(DoaBoundsError, ValueError):
    """A CRB summary marked invalid was passed where a valid one is required."""


class AllDrawsRejected(DoaBoundsError, RuntimeError):
    """Every Monte Carlo prior draw was rejected by the CRB screening rules."""


class GridTooCoarse(DoaBoundsError, ValueError):
    """Estimator search grid is too coarse relative to the prior support."""


class QuadratureNotConverged(DoaBoundsError, RuntimeError):
    """Adaptive quadrature failed to reach the requested relative tolerance."""


class ConfigError(DoaBoundsError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Configuration file could not be read or parsed."""


class ValidationError(ConfigError):
    """Configuration parsed but one or more fields are invalid.

    Carries the full list of violations so a user can fix everything in
    one pass; each entry names the offending field path.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(
            "  - " + e for e in self.errors))
