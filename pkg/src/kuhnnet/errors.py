"""Exception hierarchy shared by every module."""


class KuhnnetError(Exception):
    """Base class for library errors."""


class InputError(KuhnnetError, ValueError):
    """Arguments with the wrong shape, range or type."""


class DomainError(KuhnnetError, ValueError):
    """A point or parameter outside the domain where an operation is defined."""


class ParseError(KuhnnetError, ValueError):
    """A malformed serialized document."""


class CapacityError(KuhnnetError, ValueError):
    """Too many samples for the requested memorizer shape."""

    def __init__(self, message, capacity=None):
        super().__init__(message)
        self.capacity = capacity


class ResourceError(KuhnnetError, RuntimeError):
    """A build that would exceed the configured lattice cap."""
