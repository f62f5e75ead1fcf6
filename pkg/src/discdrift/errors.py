class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ConfigError(ValueError):
    """An experiment configuration could not be parsed or validated."""
