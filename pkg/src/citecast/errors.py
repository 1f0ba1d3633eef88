"""Shared exception types, mapped to CLI exit codes."""


class DataError(Exception):
    """Invalid, inconsistent, or missing input data."""


class NumericError(Exception):
    """Numeric failure: training divergence or a failed gradient check."""
