"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`ChristoffelError`, so callers (and the CLI) can catch one type.
"""


class ChristoffelError(Exception):
    """Base class for all package errors."""


class NonSummable(ChristoffelError, ValueError):
    """The eigenvalue sequence has an infinite sum."""


class OutOfDomain(ChristoffelError, ValueError):
    """A point lies outside the unit cube."""


class DensityMismatch(ChristoffelError, ValueError):
    """Sample set drawn for a different basis prefix than requested."""


class DegeneratePoint(ChristoffelError, ValueError):
    """The sampling density vanishes at a sample point."""


class RankDeficient(ChristoffelError, ValueError):
    """Weighted design matrix is numerically rank deficient."""


class NoAdmissibleDesign(ChristoffelError, RuntimeError):
    """Every drawn design failed the conditioning test."""


class DeltaOutOfRange(ChristoffelError, ValueError):
    """Failure probability outside the range a bound is valid for."""


class GridTooSmall(ChristoffelError, ValueError):
    """Complexity grid too small to support a tractability verdict."""


class GridMismatch(ChristoffelError, ValueError):
    """Two tables that must share a grid do not."""


class ConfigInvalid(ChristoffelError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class EnumerationLimit(ChristoffelError, ValueError):
    """A tensor-product spectrum would need more terms than the enumeration cap."""
