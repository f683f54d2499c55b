"""Exception types shared across the package."""


class StochMathieuError(Exception):
    """Base class for all package errors."""


class EmbeddingNotPSD(StochMathieuError):
    """Circulant embedding produced a significantly negative eigenvalue."""


class Overflow(StochMathieuError):
    """A simulated path exceeded the blow-up guard."""


class NotConverged(StochMathieuError):
    """Hill-determinant classification changed when the truncation was doubled."""


class InvalidRegime(StochMathieuError):
    """Parameters fall outside the regime where rare events are rare."""


class QuadratureFailure(StochMathieuError):
    """Adaptive quadrature did not reach the requested tolerance."""


class EmptyInput(StochMathieuError):
    """An estimator received no usable data."""


class ConfigError(StochMathieuError):
    """Experiment configuration failed validation."""
