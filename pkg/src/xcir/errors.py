"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid scenario configuration or model parameters."""


class NonAffineModelError(ValueError):
    """A jump model without an exponent pair was used where one is required."""

    def __init__(self, message, jump_index=None):
        super().__init__(message)
        self.jump_index = jump_index


class InadmissibleJumpError(RuntimeError):
    """A sampled jump pushed the state below zero."""


class LimitNotResolvedError(RuntimeError):
    """A numerical limit did not converge on the supplied grid."""
