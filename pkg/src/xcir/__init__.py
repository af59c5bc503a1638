"""Exact simulation and affine transforms for a CIR process with scheduled jumps."""

__version__ = "0.1.0"

from .affine import AffineExponents, char_fn, extended_exponents, semiflow_check
from .errors import (ConfigError, InadmissibleJumpError, LimitNotResolvedError,
                     NonAffineModelError)
from .jumps import (ExponentPair, check_admissibility, check_full_convex_span, exponents,
                    sample_jump, support_infimum, transport_map)
from .kernel import cir_exponents, cir_mean_var, sample_cir_exact, transition_params
from .model import (CIRParams, DropToGamma, GenericTransport, JumpSchedule, MCSettings, NoJump,
                    ScenarioConfig, TimeChange, linear_transport, load_config, validate_config)
from .simulate import simulate_path, simulate_terminal, terminal_sample

__all__ = [
    "AffineExponents", "char_fn", "extended_exponents", "semiflow_check",
    "ConfigError", "InadmissibleJumpError", "LimitNotResolvedError", "NonAffineModelError",
    "ExponentPair", "check_admissibility", "check_full_convex_span", "exponents",
    "sample_jump", "support_infimum", "transport_map",
    "cir_exponents", "cir_mean_var", "sample_cir_exact", "transition_params",
    "CIRParams", "DropToGamma", "GenericTransport", "JumpSchedule", "MCSettings", "NoJump",
    "ScenarioConfig", "TimeChange", "linear_transport", "load_config", "validate_config",
    "simulate_path", "simulate_terminal", "terminal_sample",
]
