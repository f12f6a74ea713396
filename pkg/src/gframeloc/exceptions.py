"""Exception hierarchy shared by all modules."""


class GFrameError(Exception):
    """Base class for errors raised by gframeloc."""


class InputError(GFrameError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite entries, mismatched index sets)."""


class NotAFrameError(GFrameError):
    """The family fails the lower frame bound test."""


class NotDualPairError(GFrameError):
    """Two families do not reconstruct each other within tolerance."""


class InsufficientDataError(InputError):
    """Too few usable data points for a fit."""


class ConfigError(InputError):
    """Invalid scenario document; the message names the line or field."""
