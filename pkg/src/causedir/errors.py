"""Shared error types."""


class NumericError(RuntimeError):
    """A linear-algebra or floating-point failure that invalidates a result.

    Raised when a factorization breaks down or a statistic falls outside
    its numerically plausible range. Distinct from ValueError, which marks
    bad arguments the caller can fix.
    """
