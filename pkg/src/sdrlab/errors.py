"""Exception hierarchy shared across the package."""


class SDRError(ValueError):
    """Base class for all sdrlab errors."""


class DimensionError(SDRError):
    """Shapes or requested dimensions are incompatible."""


class InputError(SDRError):
    """Input values are malformed (non-finite, non-numeric, ...)."""


class RankError(SDRError):
    """A matrix expected to have full column rank does not."""


class ConfigError(SDRError):
    """Invalid configuration or model parameters."""


class EstimationError(SDRError):
    """An estimator could not produce an estimate from the given data."""
