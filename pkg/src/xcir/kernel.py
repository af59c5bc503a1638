"""Closed-form machinery of the continuous CIR diffusion.

Over a step of length ``delta`` started at ``x`` the CIR state is distributed
as ``c * V`` with ``V`` noncentral chi-squared, where

    c      = sigma^2 (1 - exp(-kappa delta)) / (4 kappa)
    nu     = 4 kappa theta / sigma^2
    lambda = exp(-kappa delta) x / c

The same triple gives the conditional transform
``E[exp(u X_{t+tau}) | X_t = x] = exp(phi + psi x)`` with

    phi = -(nu / 2) log(1 - 2 u c)
    psi = u exp(-kappa tau) / (1 - 2 u c)

valid on ``Re(u) <= 0`` where ``1 - 2uc`` has real part >= 1, so the
principal branch of the logarithm is always the right one.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

from .model import CIRParams

# below this value of kappa*delta the small-time limits are used
KAPPA_DELTA_SWITCH = 1e-12


class TransitionParams(NamedTuple):
    c: float
    nu: float
    lambda_nc: object  # float or ndarray, follows the shape of x


def _decay(kappa, delta):
    """Return ``(exp(-kappa delta), 1 - exp(-kappa delta), (1 - exp(-kappa delta)) / (4 kappa))``."""
    kd = kappa * delta
    if kd < KAPPA_DELTA_SWITCH:
        # kappa -> 0 limit; also exact for kappa == 0
        return math.exp(-kd), kd, delta / 4.0
    one_minus = -math.expm1(-kd)
    return math.exp(-kd), one_minus, one_minus / (4.0 * kappa)


def transition_params(params: CIRParams, x, delta: float) -> TransitionParams:
    """Scale, degrees of freedom and noncentrality of the exact transition."""
    if params.sigma == 0:
        raise ValueError("degenerate diffusion; use deterministic transition")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    decay, _, c_unit = _decay(params.kappa, delta)
    s2 = params.sigma**2
    c = s2 * c_unit
    nu = 4.0 * params.kappa * params.theta / s2
    lam = decay * np.asarray(x, dtype=float) / c
    if lam.ndim == 0:
        lam = float(lam)
    return TransitionParams(c, nu, lam)


def sample_noncentral_chisq(nu, lambda_nc, rng: np.random.Generator, size=None):
    """Noncentral chi-squared draws as a Poisson mixture of Gammas.

    ``K ~ Poisson(lambda/2)``, then ``V = 2 * Gamma(nu/2 + K)``.  Works for any
    ``nu >= 0``; ``nu = 0`` leaves an atom at zero of mass ``exp(-lambda/2)``.
    """
    lam = np.asarray(lambda_nc, dtype=float)
    if np.any(lam < 0) or np.any(np.asarray(nu) < 0):
        raise ValueError("nu and lambda_nc must be nonnegative")
    if size is None:
        size = np.broadcast(lam, np.asarray(nu)).shape
    k = rng.poisson(0.5 * lam, size=size)
    out = 2.0 * rng.standard_gamma(0.5 * np.asarray(nu, dtype=float) + k, size=size)
    if np.ndim(out) == 0:
        return float(out)
    return out


def sample_cir_exact(params: CIRParams, x, delta: float, rng: np.random.Generator):
    """Exact draw of ``X_{t+delta}`` given ``X_t = x`` (vectorised over ``x``)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("state must be nonnegative")
    if delta == 0:
        out = xa.copy()
    elif params.sigma == 0:
        decay, one_minus, _ = _decay(params.kappa, delta)
        out = params.theta * one_minus + xa * decay
    else:
        c, nu, lam = transition_params(params, xa, delta)
        out = c * sample_noncentral_chisq(nu, lam, rng, size=xa.shape)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _log1m(z):
    return special.log1p(-z)


def cir_exponents_unchecked(params: CIRParams, tau: float, u):
    """:func:`cir_exponents` without the domain check (internal recursion use)."""
    if tau == 0:
        return 0j, complex(u) if np.ndim(u) == 0 else np.asarray(u, dtype=complex)
    u = np.asarray(u, dtype=complex)
    decay, one_minus, c_unit = _decay(params.kappa, tau)
    c = params.sigma**2 * c_unit
    if c == 0:
        phi = u * (params.theta * one_minus)
        psi = u * decay
    else:
        w = 2.0 * u * c
        # -(nu/2) log(1 - 2uc) with nu/2 = theta (1 - e) / (2c); no division by sigma
        phi = -(params.theta * one_minus / (2.0 * c)) * _log1m(w)
        psi = u * decay / (1.0 - w)
    if phi.ndim == 0:
        return complex(phi), complex(psi)
    return phi, psi


def cir_exponents(params: CIRParams, tau: float, u):
    """Characteristic exponents ``(phi_c, psi_c)`` of the diffusion over ``tau``.

    ``E[exp(u X_{t+tau}) | X_t = x] = exp(phi_c + psi_c x)`` for ``Re(u) <= 0``.
    Accepts scalar or array ``u``.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if np.any(np.real(u) > 0):
        raise ValueError("transform requires Re(u) <= 0")
    return cir_exponents_unchecked(params, tau, u)


def cir_mean_var(params: CIRParams, x, delta: float):
    """Conditional mean and variance of ``X_{t+delta}`` given ``X_t = x``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    decay, one_minus, c_unit = _decay(params.kappa, delta)
    c = params.sigma**2 * c_unit
    x = np.asarray(x, dtype=float)
    mean = params.theta * one_minus + x * decay
    # c^2 (2 nu + 4 lambda) rewritten without dividing by sigma
    var = 2.0 * c * params.theta * one_minus + 4.0 * c * decay * x
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def euler_full_truncation(params: CIRParams, x, delta: float, n_steps: int,
                          rng: np.random.Generator, size=None):
    """Full-truncation Euler–Maruyama; a discretised cross-check, not for production."""
    h = delta / n_steps
    sq = math.sqrt(h)
    y = np.broadcast_to(np.asarray(x, dtype=float), size or np.shape(x)).copy()
    for _ in range(n_steps):
        yp = np.maximum(y, 0.0)
        y = y + params.kappa * (params.theta - yp) * h + params.sigma * np.sqrt(yp) * sq * rng.standard_normal(y.shape)
    return np.maximum(y, 0.0)
