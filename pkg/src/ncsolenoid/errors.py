"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters or malformed input."""


class LevelError(ValueError):
    """A group element lies outside the subgroup a computation is restricted to."""


class ResourceError(RuntimeError):
    """A requested enumeration or matrix would exceed the configured size cap."""


class SolverError(RuntimeError):
    """An iterative solver failed to reach its stated residual."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual
