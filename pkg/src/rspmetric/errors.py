class InvalidParameterError(ValueError):
    """Argument outside the documented domain of an operation."""


class CapabilityError(ValueError):
    """Instance too large (or of the wrong shape) for an exact oracle."""


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
