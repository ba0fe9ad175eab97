"""Exception hierarchy and the global variable cap."""

import os

DEFAULT_CAP = 24


class TwsddError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TwsddError, ValueError):
    """An assignment or variable set does not match a function's domain."""


class CapacityError(TwsddError):
    """A request exceeds the configured variable cap or matrix limit."""


class ParseError(TwsddError):
    """Malformed input text.

    ``line`` and ``column`` are 1-based; either may be ``None`` when the
    problem is not attributable to a single position.
    """

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        if source:
            where = f"{source}: {where}"
        super().__init__(where + message)


class InvariantError(TwsddError):
    """An internal invariant was violated; this indicates a bug."""


_cap = None


def get_cap() -> int:
    """Current variable cap (``TWSDD_CAP`` overrides the default of 24)."""
    if _cap is not None:
        return _cap
    env = os.environ.get("TWSDD_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise TwsddError(f"TWSDD_CAP must be an integer, got {env!r}")
    return DEFAULT_CAP


def set_cap(value):
    """Set the process-wide cap; ``None`` restores the env/default lookup."""
    global _cap
    if value is not None and value < 0:
        raise ValueError("cap must be non-negative")
    _cap = value


def check_cap(n: int, what: str = "function"):
    cap = get_cap()
    if n > cap:
        raise CapacityError(f"{what} has {n} variables, cap is {cap}")
