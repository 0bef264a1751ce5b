"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class ComponentMinerError(Exception):
    """Base class for every error raised by this package."""


class InputError(ComponentMinerError):
    """Bad input data: unparsable documents, schema violations, empty graphs."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class UsageError(ComponentMinerError):
    """A request that is well-formed data but not a legal operation."""


class InvariantError(ComponentMinerError):
    """An internal consistency check failed."""
