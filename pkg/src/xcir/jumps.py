"""Jump-size mechanisms and their diagnostics.

Each model maps a pre-jump state ``x`` to a jump ``xi`` whose conditional
transform is ``E[exp(u xi) | x] = exp(gamma0(u) + gamma1(u) x)``.

DropToGamma(alpha, beta, lam)
    post-jump state ``Gamma(alpha + beta x, rate lam)``;
    ``gamma0 = -alpha log(1 - u/lam)``, ``gamma1 = -beta log(1 - u/lam) - u``.
TimeChange(delta)
    post-jump state is the CIR transition over ``delta``;
    ``gamma0 = -(nu/2) log(1 - 2uc)``, ``gamma1 = u (exp(-kappa delta)/(1 - 2uc) - 1)``.

The support lower bound of a law with transform ``exp(k(u))`` is
``-lim_{y->inf} k(-y)/y``; :func:`support_infimum` and
:func:`check_admissibility` estimate that limit numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, special, stats

from .errors import InadmissibleJumpError, LimitNotResolvedError, NonAffineModelError
from .kernel import _decay, sample_cir_exact
from .model import CIRParams, DropToGamma, GenericTransport, JumpModel, NoJump, TimeChange

LIMIT_Y_MAX = 1e8
LIMIT_RTOL = 1e-6


def _zeros(u):
    return np.zeros_like(np.asarray(u, dtype=complex)) if np.ndim(u) else 0j


def _as_out(v):
    return complex(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class ExponentPair:
    """Conditional exponent pair ``(gamma0, gamma1)`` of a jump law."""

    gamma0: Callable
    gamma1: Callable
    label: str = ""

    def __call__(self, u, x=0.0):
        """Total exponent ``gamma0(u) + gamma1(u) x``."""
        return self.gamma0(u) + self.gamma1(u) * x


def _no_jump_pair():
    return ExponentPair(_zeros, _zeros, "none")


def _drop_to_gamma_pair(m: DropToGamma):
    def g0(u):
        return _as_out(-m.alpha * special.log1p(-np.asarray(u, dtype=complex) / m.lam))

    def g1(u):
        u = np.asarray(u, dtype=complex)
        return _as_out(-m.beta * special.log1p(-u / m.lam) - u)

    return ExponentPair(g0, g1, f"drop_to_gamma({m.alpha}, {m.beta}, {m.lam})")


def _time_change_pair(m: TimeChange, params: CIRParams):
    if m.delta == 0:
        return ExponentPair(_zeros, _zeros, "time_change(0)")
    decay, one_minus, c_unit = _decay(params.kappa, m.delta)
    c = params.sigma**2 * c_unit
    if c == 0:
        # sigma = 0: deterministic drift over the extra clock time
        def g0(u):
            return _as_out(np.asarray(u, dtype=complex) * (params.theta * one_minus))

        def g1(u):
            return _as_out(np.asarray(u, dtype=complex) * (decay - 1.0))
    else:
        half_nu = params.theta * one_minus / (2.0 * c)  # == 2 kappa theta / sigma^2

        def g0(u):
            return _as_out(-half_nu * special.log1p(-2.0 * c * np.asarray(u, dtype=complex)))

        def g1(u):
            u = np.asarray(u, dtype=complex)
            return _as_out(u * (decay / (1.0 - 2.0 * c * u) - 1.0))

    return ExponentPair(g0, g1, f"time_change({m.delta})")


def exponents(model: JumpModel, params: Optional[CIRParams] = None) -> ExponentPair:
    """Exponent pair of a jump model (``params`` is needed for TimeChange)."""
    if isinstance(model, NoJump):
        return _no_jump_pair()
    if isinstance(model, DropToGamma):
        return _drop_to_gamma_pair(model)
    if isinstance(model, TimeChange):
        if params is None:
            raise ValueError("TimeChange exponents need the ambient CIR parameters")
        return _time_change_pair(model, params)
    if isinstance(model, GenericTransport):
        if not model.has_exponents:
            raise NonAffineModelError("no affine representation available")
        return ExponentPair(model.gamma0, model.gamma1, "generic")
    raise TypeError(f"unknown jump model {model!r}")


# --------------------------------------------------------------------------
# sampling


def sample_jump(model: JumpModel, params: CIRParams, x_pre, rng: np.random.Generator):
    """Draw jump sizes ``xi`` for pre-jump states ``x_pre`` (scalar or array)."""
    x = np.asarray(x_pre, dtype=float)
    if isinstance(model, NoJump):
        xi = np.zeros_like(x)
    elif isinstance(model, DropToGamma):
        post = rng.standard_gamma(model.alpha + model.beta * x, size=x.shape) / model.lam
        xi = post - x
    elif isinstance(model, TimeChange):
        xi = np.asarray(sample_cir_exact(params, x, model.delta, rng)) - x
    elif isinstance(model, GenericTransport):
        z = rng.random(size=x.shape)
        try:
            xi = np.asarray(model.inverse_cdf(x, z), dtype=float)
            if xi.shape != x.shape:
                raise ValueError
        except (TypeError, ValueError):
            xi = np.vectorize(model.inverse_cdf, otypes=[float])(x, z)
        if np.any(x + xi < 0):
            raise InadmissibleJumpError("inadmissible jump sample")
    else:
        raise TypeError(f"unknown jump model {model!r}")
    if xi.ndim == 0:
        return float(xi)
    return xi


def transport_map(model: JumpModel, params: Optional[CIRParams] = None) -> Callable:
    """The quantile transport ``F(x, z)`` of a model, vectorised over ``x`` and ``z``."""
    if isinstance(model, NoJump):
        return lambda x, z: np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)
    if isinstance(model, DropToGamma):
        def f(x, z):
            x = np.asarray(x, dtype=float)
            return stats.gamma.ppf(z, model.alpha + model.beta * x, scale=1.0 / model.lam) - x
        return f
    if isinstance(model, TimeChange):
        def f(x, z):
            x = np.asarray(x, dtype=float)
            if model.delta == 0:
                return np.zeros(np.broadcast(x, np.asarray(z)).shape)
            decay, one_minus, c_unit = _decay(params.kappa, model.delta)
            c = params.sigma**2 * c_unit
            if c == 0:
                return params.theta * one_minus + x * decay - x + 0.0 * np.asarray(z)
            nu = 4.0 * params.kappa * params.theta / params.sigma**2
            lam = decay * x / c
            return c * stats.ncx2.ppf(z, nu, lam) - x
        return f
    if isinstance(model, GenericTransport):
        return np.vectorize(model.inverse_cdf, otypes=[float])
    raise TypeError(f"unknown jump model {model!r}")


# --------------------------------------------------------------------------
# support and admissibility


class LimitEstimate(NamedTuple):
    value: float
    error: float
    y_max: float


def _limit_over_y(func, y_max, n_points, rtol=LIMIT_RTOL):
    """Estimate ``lim_{y->inf} func(y) / y`` for ``func(y) = L y + a log y + b + o(1)``.

    On a geometric grid the second difference of ``func`` removes the
    ``a log y + b`` part exactly, so each consecutive triple yields an
    extrapolated ``L``; the last two triples give the error estimate.
    """
    if n_points < 4:
        raise ValueError("need at least 4 grid points")
    ys = np.geomspace(1.0, y_max, n_points)
    r = ys[1] / ys[0]
    g = np.array([func(y) for y in ys], dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("exponent not analytic on test domain")
    ests = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / (ys[:-2] * (r - 1.0) ** 2)
    value, err = float(ests[-1]), float(abs(ests[-1] - ests[-2]))
    if err > rtol * max(1.0, abs(value)):
        raise LimitNotResolvedError(
            f"limit not resolved; increase y_max (last change {err:.3g} at y_max={y_max:g})")
    return LimitEstimate(value, err, float(y_max))


def _real_at_neg(fn):
    def h(y):
        v = complex(fn(-y))
        return v.real if np.isfinite(v.imag) else float("nan")
    return h


def support_infimum(pair: ExponentPair, x: float, y_max: float = LIMIT_Y_MAX,
                    n_points: int = 9) -> LimitEstimate:
    """Lower end of the support of the jump at pre-jump state ``x``.

    Computes ``-lim (gamma0(-y) + gamma1(-y) x) / y`` by extrapolation on a
    log-spaced grid ending at ``y_max``.
    """
    h = _real_at_neg(lambda u: pair.gamma0(u) + pair.gamma1(u) * x)
    est = _limit_over_y(h, y_max, n_points)
    return LimitEstimate(-est.value, est.error, est.y_max)


def _default_cminus_grid():
    radii = np.array([0.01, 0.1, 1.0, 10.0, 100.0])
    angles = np.linspace(0.5 * np.pi, 1.5 * np.pi, 9)
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


@dataclass
class AdmissibilityReport:
    """Outcome of the numerical admissibility check for one exponent pair."""

    limit_gamma0: Optional[float]
    limit_gamma1: Optional[float]
    limit_errors: tuple
    growth_constants: dict
    condition_i: bool
    condition_ii: bool
    reasons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.condition_i and self.condition_ii

    def to_dict(self):
        return {
            "passed": self.passed,
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "limit_gamma0_over_y": self.limit_gamma0,
            "limit_gamma1_over_y": self.limit_gamma1,
            "limit_errors": list(self.limit_errors),
            "growth_constants": {str(k): v for k, v in self.growth_constants.items()},
            "reasons": list(self.reasons),
        }


def check_admissibility(pair: ExponentPair, y_max: float = LIMIT_Y_MAX,
                        grid: Optional[Sequence[complex]] = None,
                        x_grid: Sequence[float] = (0.0, 0.5, 1.0, 5.0, 10.0),
                        n_points: int = 9, tol: float = 1e-6) -> AdmissibilityReport:
    """Check the analytic-extension and asymptotic conditions on ``pair``.

    Condition (ii): ``lim gamma0(-y)/y <= 0`` and ``lim gamma1(-y)/y <= 1``.
    Condition (i) is only spot-checked: on a grid of the closed left
    half-plane the exponents must be finite, and the fitted growth constant
    ``C(x) = max_w Re(gamma0(w) + gamma1(w) x) / |w|`` is reported.
    """
    reasons = []
    lims, errs = [], []
    for name, fn in (("gamma0", pair.gamma0), ("gamma1", pair.gamma1)):
        try:
            est = _limit_over_y(_real_at_neg(fn), y_max, n_points)
            lims.append(est.value)
            errs.append(est.error)
        except LimitNotResolvedError as exc:
            lims.append(None)
            errs.append(None)
            reasons.append(f"{name}: {exc}")
    cond_ii = lims[0] is not None and lims[1] is not None
    if lims[0] is not None and lims[0] > tol:
        cond_ii = False
        reasons.append(f"lim gamma0(-y)/y = {lims[0]:.6g} > 0")
    if lims[1] is not None and lims[1] > 1.0 + tol:
        cond_ii = False
        reasons.append(f"lim gamma1(-y)/y = {lims[1]:.6g} > 1")

    w = np.asarray(_default_cminus_grid() if grid is None else grid, dtype=complex)
    g0 = np.array([complex(pair.gamma0(v)) for v in w])
    g1 = np.array([complex(pair.gamma1(v)) for v in w])
    if not (np.all(np.isfinite(g0)) and np.all(np.isfinite(g1))):
        raise ValueError("exponent not analytic on test domain")
    nz = np.abs(w) > 0
    consts = {float(x): float(np.max((g0.real + g1.real * x)[nz] / np.abs(w[nz])))
              for x in x_grid}
    cond_i = all(math.isfinite(v) for v in consts.values())
    return AdmissibilityReport(lims[0], lims[1], tuple(errs), consts, cond_i, cond_ii, reasons)


# --------------------------------------------------------------------------
# Lévy–Khintchine form


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite Lévy measure ``sum_k weights[k] * delta_{atoms[k]}``."""

    weights: tuple
    atoms: tuple

    def min_support(self):
        return min(self.atoms) if self.atoms else 0.0

    def small_jump_integral(self):
        return float(sum(w * a for w, a in zip(self.weights, self.atoms) if 0 < a <= 1))

    def exponent(self, u):
        u = complex(u)
        return sum(w * (np.exp(u * a) - 1.0) for w, a in zip(self.weights, self.atoms)) + 0j


@dataclass(frozen=True)
class DensityMeasure:
    """Lévy measure with density ``density(xi)`` on ``(lower, upper)``."""

    density: Callable[[float], float]
    lower: float = 0.0
    upper: float = math.inf
    name: str = "density"

    def min_support(self):
        return self.lower

    def small_jump_integral(self):
        a, b = max(self.lower, 0.0), min(self.upper, 1.0)
        if b <= a:
            return 0.0
        val, _ = integrate.quad(lambda s: s * self.density(s), a, b, limit=200)
        return float(val)

    def exponent(self, u):
        u = complex(u)

        def part(fn):
            total = 0.0
            pieces = [(self.lower, min(self.upper, 1.0)), (max(self.lower, 1.0), self.upper)]
            for a, b in pieces:
                if b > a:
                    v, _ = integrate.quad(fn, a, b, limit=400, epsabs=1e-14, epsrel=1e-13)
                    total += v
            return total

        re = part(lambda s: (math.exp(u.real * s) * math.cos(u.imag * s) - 1.0) * self.density(s))
        im = part(lambda s: math.exp(u.real * s) * math.sin(u.imag * s) * self.density(s))
        return complex(re, im)


def gamma_levy_measure(scale: float, rate: float) -> DensityMeasure:
    """Lévy measure ``scale * exp(-rate xi) / xi`` of a Gamma subordinator."""
    return DensityMeasure(lambda s: scale * math.exp(-rate * s) / s, 0.0, math.inf,
                          f"gamma({scale}, {rate})")


@dataclass(frozen=True)
class LKParams:
    """Drift/Lévy-measure form ``gamma_j(u) = u beta_j + int (e^{u xi} - 1) nu_j(d xi)``.

    There is no Gaussian part by construction.
    """

    beta0: float = 0.0
    beta1: float = 0.0
    nu0: Optional[object] = None
    nu1: Optional[object] = None

    def gamma0(self, u):
        return complex(u) * self.beta0 + (self.nu0.exponent(u) if self.nu0 else 0j)

    def gamma1(self, u):
        return complex(u) * self.beta1 + (self.nu1.exponent(u) if self.nu1 else 0j)

    def exponent_pair(self) -> ExponentPair:
        return ExponentPair(self.gamma0, self.gamma1, "levy_khintchine")


def drop_to_gamma_lk(model: DropToGamma) -> LKParams:
    """Lévy–Khintchine data of a DropToGamma jump (drop drift -1, Gamma measures)."""
    nu1 = gamma_levy_measure(model.beta, model.lam) if model.beta > 0 else None
    return LKParams(0.0, -1.0, gamma_levy_measure(model.alpha, model.lam), nu1)


@dataclass
class LKReport:
    passed: bool
    reasons: list

    def to_dict(self):
        return {"passed": self.passed, "reasons": list(self.reasons)}


def check_lk_admissibility(lk: LKParams) -> LKReport:
    """Admissibility of a Lévy–Khintchine jump law on the nonnegative half-line.

    Requires ``beta0 >= 0``, ``beta1 >= -1``, measures carried by ``[0, inf)``
    and ``int_0^1 xi nu_j(d xi) < inf``.
    """
    reasons = []
    if lk.beta0 < 0:
        reasons.append(f"beta0 = {lk.beta0} < 0")
    if lk.beta1 < -1:
        reasons.append(f"beta1 = {lk.beta1} < -1")
    for name, nu in (("nu0", lk.nu0), ("nu1", lk.nu1)):
        if nu is None:
            continue
        if nu.min_support() < 0:
            reasons.append(f"{name}: Lévy measure not supported on R+")
            continue
        if isinstance(nu, AtomicMeasure) and any(w < 0 for w in nu.weights):
            reasons.append(f"{name}: negative atom weight")
        small = nu.small_jump_integral()
        if not math.isfinite(small):
            reasons.append(f"{name}: int_0^1 xi nu(d xi) diverges")
    return LKReport(not reasons, reasons)


# --------------------------------------------------------------------------
# full convex span


@dataclass
class SpanReport:
    """Bounded-grid look at ``g(x, z) = x + F(x, z)``.

    NUMERICAL HEURISTIC: the infimum and supremum over the unbounded domain
    cannot be certified from a finite grid.
    """

    min_g: float
    max_g: float
    argmin: tuple
    x_bounds: tuple
    z_bounds: tuple
    inf_ok: bool
    sup_ok: bool
    heuristic: bool = True

    @property
    def passed(self) -> bool:
        return self.inf_ok and self.sup_ok

    def to_dict(self):
        return {
            "passed": self.passed, "inf_ok": self.inf_ok, "sup_ok": self.sup_ok,
            "min_g": self.min_g, "max_g": self.max_g, "argmin": list(self.argmin),
            "x_bounds": list(self.x_bounds), "z_bounds": list(self.z_bounds),
            "note": "numerical heuristic on a bounded grid, not a proof",
        }


def check_full_convex_span(model: JumpModel, params: Optional[CIRParams],
                           x_grid: Sequence[float], z_grid: Sequence[float],
                           tol: float = 1e-9) -> SpanReport:
    """Grid minimum and maximum of the post-jump map ``x + F(x, z)``.

    ``inf_ok`` when the grid minimum is within ``tol`` of zero (and never
    below), ``sup_ok`` when the grid maximum reaches at least ``max(x_grid)``.
    """
    xs = np.asarray(x_grid, dtype=float)
    zs = np.asarray(z_grid, dtype=float)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    g = X + np.asarray(transport_map(model, params)(X, Z), dtype=float)
    k = np.unravel_index(int(np.nanargmin(g)), g.shape)
    min_g, max_g = float(np.nanmin(g)), float(np.nanmax(g))
    return SpanReport(
        min_g, max_g, (float(xs[k[0]]), float(zs[k[1]])),
        (float(xs.min()), float(xs.max())), (float(zs.min()), float(zs.max())),
        inf_ok=-tol <= min_g <= tol, sup_ok=max_g >= xs.max(),
    )
