"""Exception types shared across the toolkit."""


class Hv3dError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(Hv3dError):
    """Invalid configuration value or unsupported option."""


class IngestionError(Hv3dError):
    """Input file missing, truncated, or otherwise unreadable."""


class ManifestError(IngestionError):
    """Malformed or inconsistent dataset manifest."""


class ContractError(Hv3dError):
    """Operation invoked with arguments that violate its contract."""


class CalibrationError(Hv3dError):
    """Weight calibration is impossible on the given data."""


class EvaluationError(Hv3dError):
    """Correlation statistics cannot be computed on the given data."""
