"""Exception hierarchy.

The CLI maps these onto exit codes: data problems exit with 2, numeric
failures with 3, everything raised from argument checking with 1.
"""


class TailChainError(Exception):
    """Base class for all package errors."""


class DataError(TailChainError, ValueError):
    """The data cannot support the requested computation."""


class NoExceedanceError(DataError):
    """No observation exceeds the threshold on the side an estimator needs."""


class DegenerateSampleError(DataError):
    """All absolute values coincide, so no quantile threshold separates them."""


class InsufficientDataError(DataError):
    """Too few extremes of some sign for a pipeline step."""


class ValidationError(TailChainError, ValueError):
    """A tail-chain specification violates a consistency constraint."""


class BranchUndefinedError(TailChainError):
    """A law conditioned on a sign of probability zero was requested."""


class ContractError(TailChainError, ValueError):
    """A user-supplied functional breaks its documented contract."""


class ResourceError(TailChainError):
    """An exact enumeration would exceed its configured size cap."""


class NumericError(TailChainError, ArithmeticError):
    """A numerical routine failed (overflow, non-finite value, bad inversion)."""
