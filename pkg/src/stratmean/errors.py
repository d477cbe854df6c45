"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` (the CLI prints a
single ``error:<code>: message`` line) and an ``exit_code``: 3 for data or
validation problems, 4 for computation problems.
"""


class StratmeanError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"
    exit_code = 4


class ValidationError(StratmeanError):
    """A design, stratum, or ingested file violates an invariant."""

    code = "validation"
    exit_code = 3


class NonPositiveCount(ValidationError):
    code = "non-positive-count"


class SampleExceedsStratum(ValidationError):
    code = "sample-exceeds-stratum"


class WeightSumViolation(ValidationError):
    code = "weight-sum-violation"


class CorrelationOutOfRange(ValidationError):
    code = "correlation-out-of-range"


class DegenerateStratum(ValidationError):
    code = "degenerate-stratum"


class InfeasibleMoments(ValidationError):
    code = "infeasible-moments"


class ParseError(ValidationError):
    code = "parse"


class SchemaError(ValidationError):
    code = "schema"


class UnknownDataset(ValidationError):
    code = "unknown-dataset"


class ZeroAuxiliaryMean(StratmeanError):
    code = "zero-auxiliary-mean"


class ZeroDenominator(StratmeanError):
    code = "zero-denominator"


class NonPositiveBase(StratmeanError):
    code = "non-positive-base"


class ZeroMse(StratmeanError):
    code = "zero-mse"
