"""Exception types shared across the toolkit.

Two families matter to callers: data validation problems (bad manifests,
missing embeddings, malformed files) and numeric failures (degenerate
cohorts, insufficient density support). The CLI maps them to distinct
exit codes.
"""


class DataValidationError(ValueError):
    """A dataset, manifest, or file violates one of its invariants."""


class NumericError(ArithmeticError):
    """Base class for numeric failures during scoring or calibration."""


class DegenerateCohortError(NumericError):
    """A normalization cohort has zero spread where positive spread is required."""


class DegenerateSampleError(NumericError):
    """A sample is too concentrated to estimate a bandwidth from."""


class InsufficientSupportError(NumericError):
    """A leave-out exclusion left too few scores to build a density on."""


class UndefinedPrecisionError(NumericError):
    """No repeated-comparison group has enough members to estimate precision."""
