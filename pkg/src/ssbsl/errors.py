"""Exception hierarchy shared by every module."""


class SsbslError(Exception):
    """Base class for all package errors."""


class ConfigError(SsbslError, ValueError):
    """Invalid configuration or out-of-range argument."""


class DimensionError(SsbslError, ValueError):
    """Feature dimension or class index does not match the model."""


class MissingLabelError(SsbslError, ValueError):
    """True labels were required but not supplied."""


class NumericalError(SsbslError, ArithmeticError):
    """A matrix that must be positive definite is not."""


class InvalidStateError(SsbslError, ValueError):
    """Posterior hyperparameters violate their invariants."""
