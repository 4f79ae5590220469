"""Exception types raised across the package."""


class InvalidResolution(ValueError):
    """Grid too coarse for the requested layer stack."""


class DomainError(ValueError):
    """Input outside the admissible domain of an operation."""


class InvalidRequest(ValueError):
    """Request that cannot be honoured for the given operator (e.g. too many eigenpairs)."""


class TruncationError(RuntimeError):
    """Eigenvalue list too short to certify the occupation tail."""


class NumericalFailure(RuntimeError):
    """Non-finite values appeared during an iteration."""


class ConfigError(ValueError):
    """Invalid device configuration."""
