"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A physical parameter is non-finite or outside its allowed range."""


class ContractViolation(ValueError):
    """An input violates an operation precondition (e.g. unnormalized state)."""


class FitFailure(RuntimeError):
    """A least-squares fit did not converge or could not be initialized."""

    def __init__(self, message, residual_norm=None, diagnostic=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.diagnostic = diagnostic


class ConfigError(ValueError):
    """Scenario configuration could not be parsed or validated."""
