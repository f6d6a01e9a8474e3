"""Exception hierarchy shared across the package."""


class BayesFemError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(BayesFemError):
    """An argument violates a documented precondition."""


class UnsupportedElementError(BayesFemError):
    """Mesh contains an element type the operation cannot handle."""


class MeshParseError(BayesFemError):
    """Malformed mesh file. Carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotPositiveDefiniteError(BayesFemError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class CapacityError(BayesFemError):
    """Requested dense operation exceeds the configured dense cap."""


class ConfigError(BayesFemError):
    """Experiment configuration is invalid. Carries the field path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
