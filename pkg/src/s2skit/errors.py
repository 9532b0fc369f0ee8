"""Exception hierarchy shared across the toolkit.

DataError covers malformed or invariant-violating data (CLI exit 1);
UsageError covers misuse of an interface (CLI exit 2).
"""


class S2SKitError(Exception):
    pass


class DataError(S2SKitError):
    pass


class UsageError(S2SKitError):
    pass


class EndpointError(DataError):
    """A model endpoint failed: timeout, stub miss, or malformed reply."""
