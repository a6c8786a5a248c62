"""Exception types shared across the package."""


class SweepError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(SweepError):
    """Input point/polynomial/set dimensions disagree."""


class EmptySetError(SweepError):
    """A set slice S(t) is empty where a nonempty one is required."""


class EmptySliceError(SweepError):
    """A sampled slice contained no points inside the requested region."""


class SingularNormalError(SweepError):
    """No nonzero proximal normal exists (variationally critical point)."""


class NonMonotoneFlowError(SweepError):
    """Objective values fail to decrease strictly along a descent curve."""


class UnremovableSingularityError(SweepError):
    """A talweg profile carries an infinity flag inside the requested window."""


class UnsupportedFieldError(SweepError):
    """A vector field lacks the structure an operation requires (e.g. affine invertible)."""


class ScenarioError(SweepError):
    """A scenario file is malformed or semantically invalid."""
