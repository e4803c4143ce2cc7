"""Exception types shared across the package."""


class PalmtailError(Exception):
    """Base class for all errors raised by palmtail."""


class InvalidArgument(PalmtailError, ValueError):
    pass


class DimensionMismatch(PalmtailError):
    pass


class NotNormalized(PalmtailError):
    pass


class NotStationary(PalmtailError):
    pass


class NotHomogeneous(PalmtailError):
    pass


class PalmViolated(PalmtailError):
    pass


class NotCovariant(PalmtailError):
    pass


class TargetOutsideSupport(PalmtailError):
    pass


class TieDetected(PalmtailError):
    pass


class AnchorInvalid(PalmtailError):
    pass


class SpaceShiftFailed(PalmtailError):
    """Raised when a spectral law fails the space-shift check.

    ``counterexample`` holds the first failing report, if any.
    """

    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample


class WeightInvalid(PalmtailError):
    pass


class HInvalid(PalmtailError):
    pass


class ZeroField(PalmtailError):
    pass


class DivergentEnergy(PalmtailError):
    pass


class InvalidSpec(PalmtailError):
    pass


class UnknownIdentity(PalmtailError):
    pass


class ScenarioError(PalmtailError):
    """Configuration error in a scenario file; ``where`` names the field."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
