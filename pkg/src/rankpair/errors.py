"""Exception types shared across the library.

Plain ``ValueError`` is used for ordinary invalid arguments (bad index,
non-finite input, malformed box). The classes here mark conditions that
callers are expected to branch on; all of them derive from
``RankPairError`` so the CLI can distinguish library failures from bugs.
"""


class RankPairError(Exception):
    """Base class for every library-specific failure."""


class UndefinedMetricError(RankPairError, ValueError):
    """A metric has no defined value for the given input (e.g. no positive
    labels for average precision, constant input for a correlation)."""


class DegenerateDenominatorError(RankPairError, ZeroDivisionError):
    """A balance constant evaluated to zero while the paired error sum is
    nonzero, so the normalized loss is undefined."""


class DegenerateInputError(RankPairError, ValueError):
    """Clustering input is degenerate (fewer than two distinct points)."""


class ConfigError(RankPairError, ValueError):
    """A scenario or loss configuration violates its invariants."""


class DivergenceError(RankPairError, RuntimeError):
    """Training produced a non-finite loss or a degenerate box.

    Attributes:
        step: index of the optimization step at which divergence occurred.
    """

    def __init__(self, message: str | None = None, *, step: int | None = None):
        self.step = step
        super().__init__(message or f"training diverged at step {step}")
