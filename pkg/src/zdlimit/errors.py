"""Exception types shared by the backends."""


class ZDError(Exception):
    """Base class for all errors raised by :mod:`zdlimit`."""


class NotC1Error(ZDError, ValueError):
    """The datum has no classical derivative where one is required.

    Raised for raw :class:`~zdlimit.datum.Step` data; mollify them first.
    """


class CausticHit(ZDError):
    """The query point lies on (or numerically at) a caustic.

    The right-limit characteristic fan and the value computed from it are
    attached, so callers that accept the convention can keep going.
    """

    def __init__(self, message, fan=None, value=None):
        super().__init__(message)
        self.fan = fan
        self.value = value


class SolveFailure(ZDError):
    """A discretized resolvent problem could not be solved reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BlowupError(ZDError, FloatingPointError):
    """The spectral solver produced non-finite values."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnderResolved(ZDError, ValueError):
    """The grid cannot resolve the dispersive scale for the requested epsilon."""
