"""Exception hierarchy for wsdict."""


class WsDictError(Exception):
    """Base class for all wsdict errors."""


class UsageError(WsDictError, ValueError):
    """A caller broke an operation's precondition (bad range, bad batch, bad key)."""


class DuplicateKeyError(UsageError):
    """Insert of a key that is already in the dictionary."""

    def __init__(self, key: object) -> None:
        super().__init__(f"key {key!r} is already in the dictionary")
        self.key = key


class CorruptionError(WsDictError):
    """The element array does not decode into a consistent layout."""


class InvariantFailure(WsDictError, AssertionError):
    """An internal contract of the dictionary procedures did not hold."""
