"""Exception types shared across the package."""


class DataError(Exception):
    """Malformed or inconsistent input data (bad files, shape mismatches)."""


class NumericalError(Exception):
    """A computation failed numerically (underflow, divergence, rank loss)."""
