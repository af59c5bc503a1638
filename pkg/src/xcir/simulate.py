"""Exact path simulation of the CIR process with scheduled jumps.

Between event times the state moves by exact CIR transitions; at a jump date
the pre-jump value is recorded, a jump is drawn from its model and the grid
stores the post-jump value (paths are right-continuous).

Batch runs split ``n_paths`` into chunks of ``chunk_size``.  Chunk ``k``
draws from ``PCG64(SeedSequence(seed, spawn_key=(k,)))``, so results depend
only on ``(seed, chunk_size)`` and never on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from .jumps import sample_jump
from .kernel import cir_mean_var, sample_cir_exact
from .model import CIRParams, JumpSchedule, ScenarioConfig, TimeChange


class JumpRecord(NamedTuple):
    n: int
    s_n: float
    x_pre: float
    xi: float
    x_post: float


@dataclass
class SimulatedPath:
    times: np.ndarray
    values: np.ndarray
    jump_records: List[JumpRecord]


class BatchResult(NamedTuple):
    values: np.ndarray  # (n_paths, len(grid))
    jump_numbers: tuple  # 1-based indices of the jumps that fired
    x_pre: np.ndarray  # (n_paths, n_jumps)
    xi: np.ndarray  # (n_paths, n_jumps)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Generator for chunk ``chunk`` of a run with master seed ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def simulate_batch(params: CIRParams, schedule: JumpSchedule, grid, n_paths: int,
                   rng: np.random.Generator) -> BatchResult:
    """Simulate ``n_paths`` paths observed on ``grid`` (sorted, nonnegative)."""
    grid = np.asarray(grid, dtype=float)
    end = float(grid[-1])
    fired = [n for n, s in enumerate(schedule.times) if s <= end]
    jump_at = {schedule.times[n]: n for n in fired}
    events = sorted(set(grid.tolist()) | set(jump_at))
    grid_pos = {g: k for k, g in enumerate(grid.tolist())}

    values = np.empty((n_paths, len(grid)))
    x_pre = np.empty((n_paths, len(fired)))
    xi = np.empty((n_paths, len(fired)))
    x = np.full(n_paths, params.x0)
    now = 0.0
    for tau in events:
        if tau > now:
            x = sample_cir_exact(params, x, tau - now, rng)
            now = tau
        if tau in jump_at:
            n = jump_at[tau]
            j = fired.index(n)
            x_pre[:, j] = x
            xi[:, j] = sample_jump(schedule.models[n], params, x, rng)
            x = x + xi[:, j]
        if tau in grid_pos:
            values[:, grid_pos[tau]] = x
    return BatchResult(values, tuple(n + 1 for n in fired), x_pre, xi)


def simulate_path(config: ScenarioConfig, rng: np.random.Generator) -> SimulatedPath:
    """One path on the configured grid, with its jump records."""
    res = simulate_batch(config.params, config.schedule, config.grid, 1, rng)
    records = [
        JumpRecord(n, config.schedule.times[n - 1], float(res.x_pre[0, j]),
                   float(res.xi[0, j]), float(res.x_pre[0, j] + res.xi[0, j]))
        for j, n in enumerate(res.jump_numbers)
    ]
    return SimulatedPath(np.asarray(config.grid, dtype=float), res.values[0].copy(), records)


def simulate_terminal(config: ScenarioConfig, T: float, rng: np.random.Generator,
                      size: Optional[int] = None):
    """Exact draw(s) of ``X_T`` without a time grid."""
    n = 1 if size is None else int(size)
    out = simulate_batch(config.params, config.schedule, [T], n, rng).values[:, 0]
    return float(out[0]) if size is None else out


def run_chunks(fn, n_paths: int, chunk_size: int, seed: int, threads: int = 1):
    """Evaluate ``fn(n, rng)`` per chunk; results are returned in chunk order."""
    sizes = [min(chunk_size, n_paths - k) for k in range(0, n_paths, chunk_size)]

    def job(k):
        return fn(sizes[k], chunk_rng(seed, k))

    if threads <= 1 or len(sizes) == 1:
        return [job(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(len(sizes))))


def _mc_settings(config, n_paths, seed):
    n = config.mc.n_paths if n_paths is None else int(n_paths)
    if n <= 0:
        raise ValueError("n_paths must be positive")
    s = config.mc.seed if seed is None else seed
    return n, (0 if s is None else int(s))


def terminal_sample(config: ScenarioConfig, T: float, n_paths: Optional[int] = None,
                    seed: Optional[int] = None, threads: int = 1) -> np.ndarray:
    """``n_paths`` exact draws of ``X_T`` using per-chunk RNG streams."""
    n, s = _mc_settings(config, n_paths, seed)
    parts = run_chunks(lambda k, rng: simulate_terminal(config, T, rng, size=k),
                       n, config.mc.chunk_size, s, threads)
    return np.concatenate(parts)


def jump_sample(config: ScenarioConfig, up_to: float, n_paths: Optional[int] = None,
                seed: Optional[int] = None, threads: int = 1):
    """Pre-jump states and jump sizes of all jumps in ``(0, up_to]``.

    Returns ``(jump_numbers, x_pre, xi)`` with arrays shaped ``(n_paths, n_jumps)``.
    """
    n, s = _mc_settings(config, n_paths, seed)
    parts = run_chunks(
        lambda k, rng: simulate_batch(config.params, config.schedule, [up_to], k, rng),
        n, config.mc.chunk_size, s, threads)
    return (parts[0].jump_numbers, np.concatenate([p.x_pre for p in parts]),
            np.concatenate([p.xi for p in parts]))


def simulate_time_changed(params: CIRParams, schedule: JumpSchedule, T: float,
                          rng: np.random.Generator, size: Optional[int] = None):
    """``Y_{tau(T)}`` for a continuous CIR ``Y`` run on the clock ``tau(t) = t + sum_{s_n<=t} delta_n``.

    ``Y`` is advanced with one exact transition per stretch
    ``[tau(s_{n-1}), tau(s_n)]`` of its own clock.
    """
    idx = [n for n, s in enumerate(schedule.times) if s <= T]
    for n in idx:
        if not isinstance(schedule.models[n], TimeChange):
            raise ValueError("dual construction requires time-change jumps")
    k = 1 if size is None else int(size)
    y = np.full(k, params.x0)
    prev = 0.0
    for n in idx:
        s = schedule.times[n]
        step = (s - prev) + schedule.models[n].delta
        y = sample_cir_exact(params, y, step, rng)
        prev = s
    y = sample_cir_exact(params, y, T - prev, rng)
    return float(y[0]) if size is None else y


def time_changed_sample(config: ScenarioConfig, T: float, n_paths: Optional[int] = None,
                        seed: Optional[int] = None, threads: int = 1) -> np.ndarray:
    n, s = _mc_settings(config, n_paths, seed)
    parts = run_chunks(
        lambda k, rng: simulate_time_changed(config.params, config.schedule, T, rng, size=k),
        n, config.mc.chunk_size, s, threads)
    return np.concatenate(parts)


# --------------------------------------------------------------------------
# jump covariance


def jackknife_cov(a: np.ndarray, b: np.ndarray):
    """Sample covariance of paired draws and its delete-one jackknife standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    if n < 3:
        raise ValueError("need at least 3 samples")
    ac, bc = a - a.mean(), b - b.mean()
    prod = ac * bc
    total = prod.sum()
    est = total / (n - 1)
    loo = (total - prod - prod / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(est), se


def jump_covariance_mc(config: ScenarioConfig, n: int, m: int, n_paths: Optional[int] = None,
                       seed: Optional[int] = None, threads: int = 1):
    """Monte Carlo ``Cov(xi_n, xi_m)`` (1-based jump numbers) with jackknife SE."""
    s_n, s_m = config.schedule.times[n - 1], config.schedule.times[m - 1]
    numbers, _, xi = jump_sample(config, max(s_n, s_m), n_paths, seed, threads)
    a = xi[:, numbers.index(n)]
    b = xi[:, numbers.index(m)]
    return jackknife_cov(a, b)


def propagate_moments(params: CIRParams, mean: float, var: float, lengths):
    """Unconditional mean/variance after successive CIR stretches.

    Uses the law of total variance; the conditional moments are affine in the
    starting state, so only the incoming mean and variance are needed.
    """
    for h in lengths:
        decay = math.exp(-params.kappa * h)
        cm, cv = cir_mean_var(params, mean, h)
        mean, var = cm, cv + decay**2 * var
    return mean, var


def jump_covariance_analytic_tc(params: CIRParams, schedule: JumpSchedule, n: int, m: int) -> float:
    """Closed-form ``Cov(xi_n, xi_m)`` when every jump up to ``max(s_n, s_m)`` is a time change.

    With ``t_k = s_k + H(s_k) - delta_k`` the jumps are the increments
    ``Y_{t_k + delta_k} - Y_{t_k}`` of a CIR ``Y`` started at ``x0``, and
    ``Cov(Y_a, Y_b) = exp(-kappa |b - a|) Var(Y_{min(a, b)})``.
    """
    if params.kappa <= 0:
        raise ValueError("analytic covariance requires kappa > 0")
    last = max(n, m)
    deltas = []
    for k in range(last):
        model = schedule.models[k]
        if not isinstance(model, TimeChange):
            raise ValueError("dual construction requires time-change jumps")
        deltas.append(model.delta)
    starts = []
    shift = 0.0
    for k in range(last):
        starts.append(schedule.times[k] + shift)  # t_k, clock time just before the jump
        shift += deltas[k]

    def var_at(a):
        return propagate_moments(params, params.x0, 0.0, [a])[1]

    def cov(a, b):
        lo, hi = min(a, b), max(a, b)
        return math.exp(-params.kappa * (hi - lo)) * var_at(lo)

    an, bn = starts[n - 1], starts[n - 1] + deltas[n - 1]
    am, bm = starts[m - 1], starts[m - 1] + deltas[m - 1]
    return cov(bn, bm) - cov(bn, am) - cov(an, bm) + cov(an, am)
