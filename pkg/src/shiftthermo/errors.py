"""Exception types. Every error carries a short machine-readable ``code``."""

from __future__ import annotations


class ThermoError(Exception):
    """Base class; ``code`` names the failure mode (e.g. ``PRESSURE_POSITIVE``)."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class Refused(ThermoError):
    """A mathematical precondition does not hold, so the computation is declined."""


class InvalidInput(ThermoError, ValueError):
    """Malformed graph, potential, path or parameter."""

    def __init__(self, message: str, code: str = "INVALID_INPUT"):
        super().__init__(code, message)


class Undecided(ThermoError):
    """Bounded exploration could not certify the answer."""

    def __init__(self, message: str = ""):
        super().__init__("UNDECIDED", message)
