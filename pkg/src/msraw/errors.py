"""Exception hierarchy shared by every module."""


class MsrawError(Exception):
    """Base class for toolkit errors."""


class RangeError(MsrawError, ValueError):
    """An input value lies outside the domain of an operation."""


class ShapeError(MsrawError, ValueError):
    """Array shapes are incompatible with an operation."""


class InvertibilityError(MsrawError, ValueError):
    """A matrix that must be inverted is (numerically) singular."""


class CalibrationError(MsrawError, ValueError):
    """A sensor profile yields an invalid noise model."""


class ConfigError(MsrawError, ValueError):
    """A configuration or profile file is malformed or incomplete."""


class FormatError(MsrawError, ValueError):
    """A file does not match the expected on-disk format."""
