class OttoEngineError(Exception):
    """Base class for every domain failure raised by the engine."""


class ConfigError(OttoEngineError):
    pass


class InvalidEfficiency(ConfigError):
    pass


class FeedbackUnstable(OttoEngineError):
    """The feedback gain pushes the effective cavity decay to zero or below."""


class StabilityError(OttoEngineError):
    pass


class Unstable(StabilityError):
    """A drift eigenvalue has a non-negative real part."""


class UnstableRegion(StabilityError):
    """The lower polariton frequency is not real positive."""


class SingularSystem(OttoEngineError):
    pass


class DegenerateSpectrum(OttoEngineError):
    pass


class StepFailure(OttoEngineError):
    pass


class OutOfRange(OttoEngineError):
    pass


class NonRealEnergy(OttoEngineError):
    pass


class OffGrid(OttoEngineError):
    pass
