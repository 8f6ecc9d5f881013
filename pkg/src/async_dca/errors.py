"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input value violates a documented invariant."""


class DimensionError(ValidationError):
    """Raised when array shapes or index ranges do not line up."""
