"""Exception types shared across modules."""
from __future__ import annotations


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class UnsupportedError(ValueError):
    """The requested case is outside the supported families or sizes."""


class ResourceLimitError(RuntimeError):
    """A configured size bound (group order, coset count) was exceeded."""

    def __init__(self, message: str, high_water: int | None = None):
        super().__init__(message)
        self.high_water = high_water
