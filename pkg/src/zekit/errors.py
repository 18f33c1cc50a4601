"""Exception types shared across the package."""


class ZekitError(Exception):
    """Base class for all package-specific errors."""


class NotHermitian(ZekitError):
    pass


class DimensionMismatch(ZekitError):
    pass


class InvalidInput(ZekitError):
    pass


class NotUnit(ZekitError):
    pass


class SynthesisFailed(ZekitError):
    pass


class ConstructionFailed(ZekitError):
    pass


class HypothesisNotMet(ZekitError):
    pass


class AngleSumMismatch(ZekitError):
    pass


class DimensionGuard(ZekitError):
    pass
