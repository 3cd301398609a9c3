"""Exception hierarchy.

Two families: :class:`SpecError` for malformed input (bad shapes, a matrix
that is not positive definite, an unknown phi family) and
:class:`InvariantViolation` for geometric or numerical conditions that fail
while computing (loss of strong convexity, a solver that does not converge).
The CLI maps the first to exit code 1 and the second to exit code 2.
"""


class MinkowskiError(Exception):
    """Base class for all package errors."""


class SpecError(MinkowskiError, ValueError):
    """A norm specification or run configuration is malformed."""


class InvariantViolation(MinkowskiError):
    """A required geometric or numerical invariant does not hold."""


class NotStronglyConvex(InvariantViolation):
    pass


class PhiDomainViolation(InvariantViolation):
    pass


class NavigationInfeasible(InvariantViolation):
    pass


class ConvergenceFailure(InvariantViolation):
    pass


class DifferentiationFailure(InvariantViolation):
    pass


class SingularChart(InvariantViolation):
    pass


class NonPositiveCurvature(InvariantViolation):
    pass


class SectionMisses(InvariantViolation):
    pass
