"""Statistical verification of the affine transform and related identities.

All reports carry the seed, the config hash and the sample sizes; with the
same inputs they serialize to identical JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .affine import extended_exponents
from .jumps import exponents
from .model import CIRParams, JumpSchedule, ScenarioConfig, TimeChange, config_hash, encode_complex
from .simulate import chunk_rng, terminal_sample, time_changed_sample

Z_THRESHOLD = 4.0
SE_THRESHOLD = 3.0
KS_LEVEL = 0.01


def _z(diff, se):
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


@dataclass
class CFRow:
    u: complex
    analytic: complex
    estimate: complex
    se_re: float
    se_im: float
    z_re: float
    z_im: float

    def to_dict(self):
        return {
            "u": encode_complex(self.u), "analytic": encode_complex(self.analytic),
            "estimate": encode_complex(self.estimate), "se_re": self.se_re,
            "se_im": self.se_im, "z_re": self.z_re, "z_im": self.z_im,
        }


@dataclass
class CFComparisonReport:
    rows: List[CFRow]
    T: float
    n_paths: int
    seed: int
    config_hash: str
    threshold: float = Z_THRESHOLD

    @property
    def max_abs_z(self) -> float:
        return max((max(abs(r.z_re), abs(r.z_im)) for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.threshold

    def to_dict(self):
        return {
            "check": "compare_affine", "passed": self.passed, "max_abs_z": self.max_abs_z,
            "threshold": self.threshold, "T": self.T, "n_paths": self.n_paths,
            "seed": self.seed, "config_hash": self.config_hash,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_text(self):
        lines = [f"{'u':>16} {'analytic':>28} {'mc':>28} {'z_re':>8} {'z_im':>8}"]
        for r in self.rows:
            lines.append(f"{_fmt(r.u):>16} {_fmt(r.analytic):>28} {_fmt(r.estimate):>28} "
                         f"{r.z_re:8.3f} {r.z_im:8.3f}")
        lines.append(f"max |z| = {self.max_abs_z:.3f} (threshold {self.threshold}) "
                     f"-> {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _fmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.6g}{z.imag:+.6g}i"


def compare_affine(config: ScenarioConfig, T: Optional[float] = None,
                   u_grid: Optional[Sequence[complex]] = None, n_paths: Optional[int] = None,
                   seed: Optional[int] = None, t: float = 0.0, threads: int = 1,
                   sample: Optional[np.ndarray] = None) -> CFComparisonReport:
    """Monte Carlo ``E[exp(u X_T)]`` from exact terminal draws against ``exp(phi + psi x0)``.

    Errors are judged per real/imaginary component; the run passes iff every
    component z-score is at most 4 in absolute value.
    """
    if t != 0.0:
        raise ValueError("Monte Carlo comparison starts from the deterministic state at t=0")
    T = config.horizon if T is None else T
    u_grid = config.u_grid if u_grid is None else tuple(complex(u) for u in u_grid)
    n = config.mc.n_paths if n_paths is None else n_paths
    s = (config.mc.seed or 0) if seed is None else seed
    x = terminal_sample(config, T, n, s, threads) if sample is None else np.asarray(sample)
    rows = []
    for u in u_grid:
        u = complex(u)
        ex = extended_exponents(config.params, config.schedule, 0.0, T, u)
        analytic = complex(np.exp(ex.phi + ex.psi * config.params.x0))
        vals = np.exp(u * x)
        est = complex(vals.mean())
        se_re = float(vals.real.std(ddof=1) / math.sqrt(x.size))
        se_im = float(vals.imag.std(ddof=1) / math.sqrt(x.size))
        rows.append(CFRow(u, analytic, est, se_re, se_im,
                          _z(est.real - analytic.real, se_re),
                          _z(est.imag - analytic.imag, se_im)))
    return CFComparisonReport(rows, T, int(x.size), int(s), config_hash(config))


@dataclass
class StationaryReport:
    delta: float
    max_deviation: float
    tolerance: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_deviation <= self.tolerance

    def to_dict(self):
        return {"check": "stationary_limit", "delta": self.delta,
                "max_deviation": self.max_deviation, "tolerance": self.tolerance,
                "passed": self.passed}


def gamma_stationary_cf(params: CIRParams, u):
    """``(1 - u sigma^2 / (2 kappa))^(-2 kappa theta / sigma^2)``, the stationary Gamma transform."""
    shape = 2.0 * params.kappa * params.theta / params.sigma**2
    rate = 2.0 * params.kappa / params.sigma**2
    return np.exp(-shape * np.log(1.0 - np.asarray(u, dtype=complex) / rate))


def stationary_limit_check(params: CIRParams, delta_large: float, u_grid: Sequence[complex],
                           x_grid: Sequence[float] = (0.0, 1.0, 5.0),
                           tolerance: Optional[float] = None) -> StationaryReport:
    """Distance between the post-jump transform after ``TimeChange(delta_large)`` and the stationary law."""
    if params.kappa <= 0 or params.sigma <= 0:
        raise ValueError("stationary limit needs kappa > 0 and sigma > 0")
    pair = exponents(TimeChange(delta_large), params)
    dev = 0.0
    for u in u_grid:
        u = complex(u)
        target = complex(gamma_stationary_cf(params, u))
        for x in x_grid:
            post = complex(np.exp(pair.gamma0(u) + pair.gamma1(u) * x + u * x))
            dev = max(dev, abs(post - target))
    return StationaryReport(float(delta_large), dev, tolerance)


def stationary_sweep(params: CIRParams, deltas: Sequence[float], u_grid: Sequence[complex],
                     x_grid: Sequence[float] = (0.0, 1.0, 5.0)):
    """Deviation for each delta and whether it never increases along ``deltas``."""
    devs = [stationary_limit_check(params, d, u_grid, x_grid).max_deviation for d in deltas]
    monotone = all(b <= a for a, b in zip(devs, devs[1:]))
    return {"check": "stationary_sweep", "deltas": list(deltas), "deviations": devs,
            "passed": monotone}


@dataclass
class CompensatorRow:
    name: str
    mc_mean: float
    mc_se: float
    quadrature: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class CompensatorReport:
    rows: List[CompensatorRow]
    n_samples: int
    seed: int
    n_jumps: int

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def to_dict(self):
        return {"check": "compensator", "passed": self.passed, "n_samples": self.n_samples,
                "seed": self.seed, "n_jumps": self.n_jumps,
                "rows": [r.to_dict() for r in self.rows]}


def default_test_functions(schedule: JumpSchedule) -> Dict[str, Callable]:
    """``1``, ``z`` and ``e^z 1{t <= s_5}`` (``s_5`` falls back to the last date)."""
    cut = schedule.times[min(4, len(schedule) - 1)] if len(schedule) else 0.0
    return {
        "one": lambda t, z: np.ones_like(z),
        "z": lambda t, z: z,
        "exp_z_until_s5": lambda t, z: np.exp(z) * (t <= cut),
    }


def compensator_check(schedule: JumpSchedule, test_functions: Dict[str, Callable],
                      n_samples: int, seed: int, T: float = math.inf) -> CompensatorReport:
    """Compare ``E[sum_n H(s_n, Z_n)]`` (Monte Carlo) with ``sum_n int_0^1 H(s_n, z) dz``."""
    times = [s for s in schedule.times if s <= T]
    rng = chunk_rng(seed, 0)
    z = rng.random((n_samples, len(times)))
    rows = []
    for name, h in test_functions.items():
        totals = np.zeros(n_samples)
        quad = 0.0
        for j, s in enumerate(times):
            totals += np.asarray(h(s, z[:, j]), dtype=float)
            quad += integrate.quad(lambda v: float(h(s, np.float64(v))), 0.0, 1.0,
                                   epsabs=1e-13, epsrel=1e-13)[0]
        mean = float(totals.mean())
        se = float(totals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
        diff = abs(mean - quad)
        ok = diff <= SE_THRESHOLD * se if se > 0 else diff <= 1e-12 * max(1.0, abs(quad))
        rows.append(CompensatorRow(name, mean, se, quad, bool(ok)))
    return CompensatorReport(rows, n_samples, seed, len(times))


def dual_ks_check(config: ScenarioConfig, T: Optional[float] = None, n: int = 10_000,
                  seed: int = 0, threads: int = 1):
    """Two-sample KS between the jump construction and the time-changed continuous CIR."""
    T = config.horizon if T is None else T
    a = terminal_sample(config, T, n, seed, threads)
    b = time_changed_sample(config, T, n, seed + 1, threads)
    res = stats.ks_2samp(a, b)
    return {"check": "dual_ks", "statistic": float(res.statistic), "pvalue": float(res.pvalue),
            "level": KS_LEVEL, "n": n, "seed": seed, "passed": bool(res.pvalue > KS_LEVEL)}


def all_time_change(config: ScenarioConfig, T: Optional[float] = None) -> bool:
    T = config.horizon if T is None else T
    active = [m for s, m in config.schedule if s <= T]
    return bool(active) and all(isinstance(m, TimeChange) for m in active)
