"""Exception hierarchy shared across the package."""


class MfgmfError(Exception):
    """Base class for all package errors."""


class ArgumentError(MfgmfError, ValueError):
    """Invalid argument values or inconsistent dimensions."""


class DegenerateEnsembleError(MfgmfError):
    """Operation requires more ensemble members than were provided."""


class NumericalError(MfgmfError):
    """A linear-algebra step failed (non-factorizable covariance, etc.)."""


class ResourceLimitError(MfgmfError):
    """A configured resource cap (e.g. mixture component count) was exceeded."""


class TrainingFailureError(MfgmfError):
    """Autoencoder optimization produced a non-finite loss."""


class RomFormatError(MfgmfError):
    """A surrogate-model file failed validation on load."""


class ConfigError(MfgmfError):
    """Experiment configuration is invalid or incomplete."""
