"""Exception hierarchy shared by all modules."""


class DosAllocError(Exception):
    """Base class for every error raised by this package."""


class InvalidModel(DosAllocError, ValueError):
    pass


class NonConvergence(DosAllocError, RuntimeError):
    pass


class DimensionMismatch(DosAllocError, ValueError):
    pass


class OutOfBracket(DosAllocError, ValueError):
    pass


class LadderTooShort(DosAllocError, ValueError):
    pass


class TooLarge(DosAllocError, ValueError):
    """Raised when an exhaustive enumeration would exceed its size guard."""


class Infeasible(DosAllocError, ValueError):
    pass


class MalformedPartition(DosAllocError, ValueError):
    pass


class UnsupportedShape(DosAllocError, ValueError):
    pass


class MalformedCdf(DosAllocError, ValueError):
    pass


class InsufficientEnergy(DosAllocError, ValueError):
    pass


class EmptyActionSet(DosAllocError, ValueError):
    pass


class UnreachableState(DosAllocError, KeyError):
    pass


class ConfigError(DosAllocError, ValueError):
    """Configuration file problem; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
