"""Exception types shared across the package.

Exit-code mapping used by the CLI: NumericalError maps to 3, every other
AdvBoundError (and argument validation) maps to 2.
"""


class AdvBoundError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AdvBoundError):
    """Two vectors or matrices have incompatible shapes."""


class InvalidSample(AdvBoundError):
    """A sample contains non-finite entries or is otherwise malformed."""


class ZeroNormSample(AdvBoundError):
    """A sample with zero l2 norm was passed where a direction is required."""


class NumericalError(AdvBoundError):
    """A numeric quantity left its tolerance window (e.g. fidelity > 1 + 1e-9)."""


class NotNormalized(AdvBoundError):
    """A state vector expected to have unit norm does not."""


class DomainError(AdvBoundError):
    """A parameter lies outside the mathematical domain of the operation."""


class MetricMismatch(AdvBoundError):
    """An object built for one metric was combined with a different metric."""


class BudgetExhausted(AdvBoundError):
    """Too few unabsorbed samples remain to place the requested sphere."""


class AlphaTooSmall(AdvBoundError):
    """alpha * n < 1: the error budget cannot hold even one sample."""


class PartitionError(AdvBoundError):
    """A train/test partition would leave fewer than two samples on a side."""


class BracketError(AdvBoundError):
    """The inversion budget lies outside [bound(0), bound(eps_hi)]."""


class FormatError(AdvBoundError):
    """A file does not conform to its declared format."""


class MissingLabels(AdvBoundError):
    """An operation requires labels but the sample set has none."""


class DegenerateLabels(AdvBoundError):
    """Training requires at least two distinct classes."""


class BudgetExceeded(AdvBoundError):
    """A diagnostics oracle was asked to run above its size budget."""
