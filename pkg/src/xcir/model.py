"""Domain types and scenario configuration.

Everything here is immutable once constructed.  Jump schedules are finite;
a jump time past the configured horizon is kept but never fires.

Scenario JSON layout (complex numbers are ``{"re": r, "im": i}``)::

    {
      "params":   {"kappa": 0.1, "theta": 3.0, "sigma": 0.1, "x0": 2.0},
      "schedule": [{"time": 7.0, "model": {"type": "drop_to_gamma",
                                           "alpha": 3.0, "beta": 1.0,
                                           "lambda": 1.0}}, ...],
      "horizon":  100.0,
      "grid":     {"dt": 0.1}            # or {"points": [0.0, 0.5, ...]}
      "mc":       {"n_paths": 100000, "seed": 7, "chunk_size": 1000},
      "u_grid":   [{"re": -1.0, "im": 0.0}, ...]
    }

Jump model ``type`` is one of ``none``, ``drop_to_gamma`` (``alpha``,
``beta``, ``lambda``), ``time_change`` (``delta``) or ``linear``
(``shift``, ``slope``; deterministic jump ``shift + slope * x``).
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError

DEFAULT_U_GRID = (-2.0 + 0j, -1.0 + 0j, -0.5 + 0j, 1j, 2j, -1.0 + 1j)
DEFAULT_N_PATHS = 100_000
DEFAULT_CHUNK_SIZE = 1_000
# grid points closer than this (relative to the horizon) to a jump time snap onto it
_SNAP_RTOL = 1e-9


def _check_nonneg(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ConfigError(f"{name} must be a finite nonnegative number, got {value}")
    return value


@dataclass(frozen=True)
class CIRParams:
    """Diffusion parameters of ``dX = kappa (theta - X) dt + sigma sqrt(X) dW``.

    Attributes
    ----------
    kappa : float
        Mean-reversion rate (1/time).
    theta : float
        Long-term mean.
    sigma : float
        Volatility of the square-root diffusion.
    x0 : float
        Initial state.
    """

    kappa: float
    theta: float
    sigma: float
    x0: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "theta", "sigma", "x0"):
            object.__setattr__(self, name, _check_nonneg(name, getattr(self, name)))

    @property
    def feller(self) -> bool:
        """True iff ``2 theta kappa >= sigma**2`` (zero is unattainable)."""
        return 2.0 * self.theta * self.kappa >= self.sigma**2


# --------------------------------------------------------------------------
# jump models


@dataclass(frozen=True)
class NoJump:
    """Inert jump date: the state is left unchanged."""

    def to_dict(self):
        return {"type": "none"}


@dataclass(frozen=True)
class DropToGamma:
    """Jump to zero, then restart from a Gamma(alpha + beta x, rate lam) draw."""

    alpha: float
    beta: float
    lam: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"DropToGamma alpha must be positive, got {self.alpha}")
        if not self.lam > 0:
            raise ConfigError(f"DropToGamma lambda must be positive, got {self.lam}")
        _check_nonneg("DropToGamma beta", self.beta)

    def to_dict(self):
        return {"type": "drop_to_gamma", "alpha": self.alpha, "beta": self.beta,
                "lambda": self.lam}


@dataclass(frozen=True)
class TimeChange:
    """Jump produced by advancing the CIR clock by ``delta``."""

    delta: float

    def __post_init__(self):
        _check_nonneg("TimeChange delta", self.delta)

    def to_dict(self):
        return {"type": "time_change", "delta": self.delta}


@dataclass(frozen=True)
class GenericTransport:
    """Jump ``xi = inverse_cdf(x_pre, z)`` with ``z ~ U[0, 1]``.

    ``gamma0``/``gamma1`` are optional callables giving the conditional
    exponent pair; without them the model has no affine representation.
    ``spec`` holds a JSON description when the model came from a config file.
    """

    inverse_cdf: Callable[[float, float], float]
    gamma0: Optional[Callable[[complex], complex]] = None
    gamma1: Optional[Callable[[complex], complex]] = None
    spec: Optional[dict] = field(default=None, compare=False)

    @property
    def has_exponents(self) -> bool:
        return self.gamma0 is not None and self.gamma1 is not None

    def to_dict(self):
        if self.spec is None:
            raise ConfigError("GenericTransport built from a callback cannot be serialized")
        return dict(self.spec)


@dataclass(frozen=True)
class _LinearMap:
    shift: float
    slope: float

    def __call__(self, x, z):
        return self.shift + self.slope * np.asarray(x, dtype=float) + 0.0 * np.asarray(z)


@dataclass(frozen=True)
class _LinearExponent:
    coef: float

    def __call__(self, u):
        return self.coef * u


def linear_transport(shift: float, slope: float) -> GenericTransport:
    """Deterministic jump ``xi = shift + slope * x`` (exponents ``shift*u``, ``slope*u``)."""
    shift, slope = float(shift), float(slope)
    return GenericTransport(
        inverse_cdf=_LinearMap(shift, slope),
        gamma0=_LinearExponent(shift),
        gamma1=_LinearExponent(slope),
        spec={"type": "linear", "shift": shift, "slope": slope},
    )


JumpModel = Union[NoJump, DropToGamma, TimeChange, GenericTransport]


def jump_model_from_dict(raw: dict) -> JumpModel:
    kind = raw.get("type")
    try:
        if kind == "none":
            return NoJump()
        if kind == "drop_to_gamma":
            return DropToGamma(float(raw["alpha"]), float(raw.get("beta", 0.0)),
                               float(raw["lambda"]))
        if kind == "time_change":
            return TimeChange(float(raw["delta"]))
        if kind == "linear":
            return linear_transport(raw.get("shift", 0.0), raw.get("slope", 0.0))
    except KeyError as exc:
        raise ConfigError(f"jump model {kind!r} missing field {exc}") from None
    raise ConfigError(f"unknown jump model type {kind!r}")


@dataclass(frozen=True)
class JumpSchedule:
    """Strictly increasing jump dates with one model per date."""

    times: tuple = ()
    models: tuple = ()

    def __post_init__(self):
        times = tuple(float(s) for s in self.times)
        models = tuple(self.models)
        if len(times) != len(models):
            raise ConfigError("schedule needs exactly one model per jump time")
        for s in times:
            if not (math.isfinite(s) and s > 0):
                raise ConfigError(f"jump times must be positive, got {s}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("non-increasing jump times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "models", models)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.models))

    def in_window(self, t: float, T: float, include_t: bool = False):
        """Indices ``n`` (0-based) with ``t < s_n <= T`` (``t <= s_n`` if ``include_t``)."""
        if include_t:
            return [n for n, s in enumerate(self.times) if t <= s <= T]
        return [n for n, s in enumerate(self.times) if t < s <= T]

    def count(self, T: float) -> int:
        """Number of jump dates in ``(0, T]``."""
        return sum(1 for s in self.times if s <= T)


@dataclass(frozen=True)
class MCSettings:
    n_paths: int = DEFAULT_N_PATHS
    seed: Optional[int] = None
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if int(self.n_paths) <= 0:
            raise ConfigError("n_paths must be positive")
        if int(self.chunk_size) <= 0:
            raise ConfigError("chunk_size must be positive")
        if self.seed is not None and not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "chunk_size", int(self.chunk_size))
        if self.seed is not None:
            object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class ScenarioConfig:
    params: CIRParams
    schedule: JumpSchedule
    horizon: float
    grid: tuple
    mc: MCSettings = MCSettings()
    u_grid: tuple = DEFAULT_U_GRID

    @property
    def feller(self) -> bool:
        return self.params.feller

    def with_seed(self, seed: int) -> "ScenarioConfig":
        mc = MCSettings(self.mc.n_paths, seed, self.mc.chunk_size)
        return ScenarioConfig(self.params, self.schedule, self.horizon, self.grid, mc,
                              self.u_grid)

    def with_n_paths(self, n_paths: int) -> "ScenarioConfig":
        mc = MCSettings(n_paths, self.mc.seed, self.mc.chunk_size)
        return ScenarioConfig(self.params, self.schedule, self.horizon, self.grid, mc,
                              self.u_grid)


# --------------------------------------------------------------------------
# parsing / serialization


def decode_complex(raw) -> complex:
    if isinstance(raw, dict):
        return complex(float(raw.get("re", 0.0)), float(raw.get("im", 0.0)))
    if isinstance(raw, str):
        return complex(raw.replace(" ", "").replace("i", "j"))
    return complex(raw)


def encode_complex(u: complex) -> dict:
    u = complex(u)
    return {"re": u.real, "im": u.imag}


def augment_grid(points, jump_times, horizon):
    """Sorted grid on ``[0, horizon]`` containing 0, ``horizon`` and every jump time <= horizon.

    Idempotent: augmenting an augmented grid returns it unchanged.
    """
    jumps = [s for s in jump_times if s <= horizon]
    tol = _SNAP_RTOL * max(1.0, horizon)
    out = []
    for p in points:
        p = float(p)
        near = [s for s in jumps if abs(s - p) <= tol]
        out.append(near[0] if near else p)
    out.extend(jumps)
    out.extend([0.0, float(horizon)])
    return tuple(sorted(set(out)))


def _grid_points(raw_grid, horizon):
    if raw_grid is None:
        return [0.0, horizon]
    if "points" in raw_grid:
        pts = [float(p) for p in raw_grid["points"]]
        bad = [p for p in pts if not 0.0 <= p <= horizon]
        if bad:
            raise ConfigError(f"grid points outside [0, T]: {bad[:3]}")
        return pts
    if "dt" in raw_grid:
        dt = float(raw_grid["dt"])
        if not dt > 0:
            raise ConfigError("grid dt must be positive")
        n = int(math.floor(horizon / dt + 1e-9))
        return [k * dt for k in range(n + 1)]
    raise ConfigError("grid needs either 'dt' or 'points'")


def validate_config(raw: dict) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed JSON mapping.

    The time grid is augmented with every jump date inside the horizon.  A
    jump date past the horizon only triggers a ``UserWarning``.
    """
    try:
        p = raw["params"]
        params = CIRParams(p["kappa"], p["theta"], p["sigma"], p.get("x0", 0.0))
        horizon = float(raw["horizon"])
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc}") from None
    if not (math.isfinite(horizon) and horizon > 0):
        raise ConfigError("horizon must be positive")

    entries = raw.get("schedule", [])
    schedule = JumpSchedule(
        tuple(float(e["time"]) for e in entries),
        tuple(jump_model_from_dict(e["model"]) for e in entries),
    )
    late = [s for s in schedule.times if s > horizon]
    if late:
        warnings.warn(f"{len(late)} jump time(s) beyond horizon {horizon} are inert",
                      UserWarning, stacklevel=2)

    grid = augment_grid(_grid_points(raw.get("grid"), horizon), schedule.times, horizon)

    m = raw.get("mc", {})
    mc = MCSettings(m.get("n_paths", DEFAULT_N_PATHS), m.get("seed"),
                    m.get("chunk_size", DEFAULT_CHUNK_SIZE))

    u_grid = tuple(decode_complex(u) for u in raw.get("u_grid", DEFAULT_U_GRID))
    for u in u_grid:
        if u.real > 0:
            raise ConfigError(f"u = {u} has positive real part")
    return ScenarioConfig(params, schedule, horizon, grid, mc, u_grid)


def config_to_dict(config: ScenarioConfig) -> dict:
    """Inverse of :func:`validate_config` (grid written as explicit points)."""
    pr = config.params
    mc = {"n_paths": config.mc.n_paths, "chunk_size": config.mc.chunk_size}
    if config.mc.seed is not None:
        mc["seed"] = config.mc.seed
    return {
        "params": {"kappa": pr.kappa, "theta": pr.theta, "sigma": pr.sigma, "x0": pr.x0},
        "schedule": [{"time": s, "model": m.to_dict()} for s, m in config.schedule],
        "horizon": config.horizon,
        "grid": {"points": list(config.grid)},
        "mc": mc,
        "u_grid": [encode_complex(u) for u in config.u_grid],
    }


def config_hash(config: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON form, used to tag reports."""
    blob = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


BUILTIN_SCENARIOS = ("fig2", "fig3")


def scenario_path(name: str) -> Path:
    """Path of a bundled scenario file (``fig2`` or ``fig3``)."""
    return Path(__file__).with_name("scenarios") / f"{name}.json"


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file; bare names resolve to bundled scenarios."""
    path = str(path)
    if path in BUILTIN_SCENARIOS:
        path = scenario_path(path)
    with open(path) as fh:
        raw = json.load(fh)
    return validate_config(raw)
