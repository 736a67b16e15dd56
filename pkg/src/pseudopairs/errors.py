"""Exception hierarchy shared across the toolkit.

The CLI maps :class:`DataError` to exit code 2 and :class:`RemoteError` to 3.
"""


class PseudoPairsError(Exception):
    pass


class DataError(PseudoPairsError, ValueError):
    """Bad or inconsistent input data."""


class RemoteError(PseudoPairsError):
    """Failure talking to a remote completion service."""
