"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter set violates an invariant (CLI exit code 2)."""


class SingularChannelError(RuntimeError):
    """Channel matrix rank-deficient beyond solver tolerance; redraw the trial."""
