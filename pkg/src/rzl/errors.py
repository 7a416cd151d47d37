"""Exception hierarchy mapped to process exit codes.

The CLI translates these into its exit-code contract: 2 for precondition
violations, 3 for accuracy/conditioning failures, 4 for gate failures,
1 for anything else.
"""


class RzlError(Exception):
    """Base class for all domain errors raised by this package."""

    exit_code = 1


class PreconditionError(RzlError):
    """Invalid input or domain violation detected before computing."""

    exit_code = 2


class AccuracyError(RzlError):
    """A computation ran but could not meet its accuracy contract."""

    exit_code = 3


class GateFailure(RzlError):
    """A convergence or statistical gate failed."""

    exit_code = 4


class DegenerateDirectionError(PreconditionError):
    """Direction is tangential: |beta(u)| below tol_beta."""


class SizeError(PreconditionError):
    """Requested enumeration exceeds the supported size bound."""


class SingularityError(AccuracyError):
    """Function value vanished beyond recoverable precision."""


class ConditioningError(AccuracyError):
    """Linear-algebra step too ill-conditioned to trust."""


class DegenerateSeparationError(AccuracyError):
    """Two-point system numerically rank deficient (points too close)."""


class QuadratureError(AccuracyError):
    """Quadrature failed its self-convergence gate."""


class RootQualityError(AccuracyError):
    """Polished roots failed the residual gate."""
