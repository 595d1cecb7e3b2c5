"""Exception types raised across the package."""


class DmxError(Exception):
    """Base class for all errors raised by dmx."""


class PoleOnRealAxis(DmxError, ValueError):
    """An undamped resonance was evaluated exactly at its frequency."""


class UndampedPole(DmxError, ValueError):
    """A check that needs a smooth response met a pole with zero damping."""


class NonFiniteEntry(DmxError, ValueError):
    """A susceptibility block evaluated to NaN or Inf."""


class RectangleOutsideInterior(DmxError, ValueError):
    """A material rectangle reaches into the absorbing frame or beyond the grid."""


class CflViolation(DmxError, ValueError):
    """The time step is too large for the explicit scheme to be stable."""


class NonFiniteField(DmxError, FloatingPointError):
    """A field array picked up NaN or Inf during time stepping."""


class HistoryCapExceeded(DmxError, MemoryError):
    """The oracle history buffer would grow beyond its configured cap."""


class ProbeMisconfigured(DmxError, ValueError):
    """A propagation probe's support preconditions do not hold."""


class UnknownPreset(DmxError, KeyError):
    """No experiment preset with the requested name."""


class ParseError(DmxError, ValueError):
    """A configuration line could not be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ValidationError(DmxError, ValueError):
    """A configuration value is out of range or inconsistent."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
