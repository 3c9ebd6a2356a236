"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: validation problems exit
with 2, solver breakdowns with 3, nonlinearity audits with 4, and failed
verification bounds with 5.
"""


class GelfandLabError(Exception):
    """Base class for all package errors."""


class ValidationError(GelfandLabError):
    """A precondition on user input was violated."""


class AdmissibilityError(ValidationError):
    """A potential leaves the admissible range (negative or above the
    Hardy level (N-2)^2/4), or an ordered pair is not actually ordered."""


class SolverFailure(GelfandLabError):
    """Numerical breakdown: non-finite state, vanishing solution where
    positivity is guaranteed, or no zero before the radius cap."""


class AuditFailure(GelfandLabError):
    """A reconstructed nonlinearity failed its structural audit."""
