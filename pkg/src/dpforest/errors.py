"""Exception types shared across the package."""


class DPForestError(Exception):
    """Base class for errors raised by this package."""


class DataValidationError(DPForestError):
    """Schema or dataset content failed validation."""


class InternalInvariantError(DPForestError):
    """An internal consistency check failed. This indicates a bug."""
