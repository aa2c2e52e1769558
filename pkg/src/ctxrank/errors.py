"""Exception types shared across the package."""


class DataError(ValueError):
    """A dataset, embedding file, or model file failed validation."""


class NumericError(RuntimeError):
    """Training produced a non-finite loss or gradient."""
