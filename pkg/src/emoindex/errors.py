class DataError(ValueError):
    """Input data violates a documented format or invariant (CLI exit status 2)."""


class UsageError(ValueError):
    """Bad command-line usage or invalid configuration value (CLI exit status 1)."""
