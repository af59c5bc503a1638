"""Characteristic exponents of the CIR process with scheduled jumps.

Starting from ``(phi, psi) = (0, u)`` at ``T`` the recursion walks backwards:
a jump-free stretch of length ``h`` maps

    phi <- phi + phi_c(h, psi),   psi <- psi_c(h, psi)

and a jump date ``s_n`` maps

    phi <- phi + gamma_{n,0}(psi),   psi <- psi + gamma_{n,1}(psi).

Jumps at ``T`` are inside ``(t, T]``; a jump exactly at ``t`` is not, unless
the left limit ``phi_{t-}`` is requested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonAffineModelError
from .jumps import exponents
from .kernel import cir_exponents_unchecked
from .model import CIRParams, JumpSchedule


@dataclass(frozen=True)
class AffineExponents:
    """Result of :func:`extended_exponents`.

    ``trace`` holds ``(n, s_n, phi, psi)`` right after each jump update, in
    the order processed (latest jump first; ``n`` is 1-based).
    """

    phi: complex
    psi: complex
    trace: tuple = field(default=())


def extended_exponents(params: CIRParams, schedule: JumpSchedule, t: float, T: float,
                       u: complex, left_limit: bool = False) -> AffineExponents:
    """``(phi_t(T, u), psi_t(T, u))`` by backward recursion over the jump dates.

    With ``left_limit=True`` a jump at exactly ``t`` is included, giving
    ``(phi_{t-}(T, u), psi_{t-}(T, u))``.
    """
    if t > T:
        raise ValueError("need t <= T")
    u = complex(u)
    if u.real > 0:
        raise ValueError("transform requires Re(u) <= 0")
    idx = schedule.in_window(t, T, include_t=left_limit)
    pairs = []
    for n in idx:
        try:
            pairs.append(exponents(schedule.models[n], params))
        except NonAffineModelError:
            raise NonAffineModelError(
                f"non-affine jump model in horizon (jump {n + 1} at s={schedule.times[n]})",
                jump_index=n + 1) from None

    phi, psi = 0j, u
    cur = T
    trace = []
    for n, pair in zip(reversed(idx), reversed(pairs)):
        s = schedule.times[n]
        dphi, psi = cir_exponents_unchecked(params, cur - s, psi)
        phi += dphi
        g0, g1 = pair.gamma0(psi), pair.gamma1(psi)
        phi, psi = phi + complex(g0), psi + complex(g1)
        trace.append((n + 1, s, phi, psi))
        cur = s
    dphi, psi = cir_exponents_unchecked(params, cur - t, psi)
    return AffineExponents(phi + dphi, psi, tuple(trace))


def char_fn(params: CIRParams, schedule: JumpSchedule, t: float, T: float, u: complex,
            x_t: float) -> complex:
    """``E[exp(u X_T) | X_t = x_t]`` from the affine exponents."""
    if x_t < 0:
        raise ValueError("x_t must be nonnegative")
    if complex(u) == 0:
        return 1.0 + 0j
    ex = extended_exponents(params, schedule, t, T, u)
    return complex(np.exp(ex.phi + ex.psi * x_t))


def semiflow_check(params: CIRParams, schedule: JumpSchedule, t: float, s: float,
                   T: float, u: complex) -> float:
    """Residual of the semi-flow identity through the intermediate time ``s``.

    ``|phi_t(T) - phi_s(T) - phi_t(s, psi_s(T))| + |psi_t(T) - psi_t(s, psi_s(T))|``
    """
    if not t <= s <= T:
        raise ValueError("need t <= s <= T")
    whole = extended_exponents(params, schedule, t, T, u)
    outer = extended_exponents(params, schedule, s, T, u)
    inner = extended_exponents(params, schedule, t, s, _clip_left(outer.psi))
    return float(abs(whole.phi - (outer.phi + inner.phi)) + abs(whole.psi - inner.psi))


def _clip_left(psi: complex) -> complex:
    # rounding can leave Re(psi) a few ulps above zero
    return complex(min(psi.real, 0.0), psi.imag)
