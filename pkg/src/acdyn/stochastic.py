"""Exact finite-population simulation of the well-mixed A-SIS process.

Each node is active or reactive, susceptible or infected. Four channels move
the infected counts:

=============  =====================================  ===========
channel        aggregate rate                         effect
=============  =====================================  ===========
infect-active  beta * S_a * I / N                     I_a += 1
infect-react.  beta * S_r * I / N                     I_r += 1
clear-active   (beta_a * S_a / N + alpha) * I_a       I_a -= 1
clear-react.   (beta_a * S_a / N + alpha) * I_r       I_r -= 1
=============  =====================================  ===========

so the expected drift of ``(I_a, I_r) / N`` is the A-SIS vector field.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numba
import numpy as np

from .models import AsisParams


@dataclass(frozen=True)
class PopulationConfig:
    N: int
    params: AsisParams
    n_ia: int
    n_ir: int
    seed: int = 0
    t_end: float = 100.0
    replicates: int = 1

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if self.n_ia < 0 or self.n_ir < 0:
            raise ValueError("initial infected counts must be non-negative")
        if self.n_ia > self.n_active:
            raise ValueError(f"n_ia={self.n_ia} exceeds the {self.n_active} active nodes")
        if self.n_ir > self.N - self.n_active:
            raise ValueError(f"n_ir={self.n_ir} exceeds the {self.N - self.n_active} reactive nodes")
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    @property
    def n_active(self) -> int:
        return int(math.floor(self.params.x_a * self.N + 0.5))

    @property
    def realized_x_a(self) -> float:
        return self.n_active / self.N

    @classmethod
    def from_fractions(cls, N: int, params: AsisParams, i_a: float, i_r: float, **kw):
        """Round initial infected fractions to counts within each type."""
        n_active = int(math.floor(params.x_a * N + 0.5))
        n_ia = min(int(round(i_a * N)), n_active)
        n_ir = min(int(round(i_r * N)), N - n_active)
        return cls(N, params, n_ia, n_ir, **kw)


@dataclass
class SamplePath:
    """Infected counts of one replicate.

    Either the full event record (``times[k]`` is the time of the k-th state,
    starting with ``t = 0``) or the path already sampled onto a grid.
    """

    times: np.ndarray
    n_ia: np.ndarray
    n_ir: np.ndarray
    N: int
    t_end: float
    on_grid: bool = False

    def sample(self, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.on_grid:
            if len(grid) != len(self.times) or not np.allclose(grid, self.times):
                raise ValueError("path was recorded on a different grid")
            return self.n_ia, self.n_ir
        idx = np.searchsorted(self.times, grid, side="right") - 1
        return self.n_ia[idx], self.n_ir[idx]


@dataclass(frozen=True)
class EnsembleSummary:
    t: np.ndarray
    mean_ia: np.ndarray
    mean_ir: np.ndarray
    sd_ia: np.ndarray
    sd_ir: np.ndarray
    extinction_fraction: float
    replicates: int

    @property
    def mean_infected(self) -> np.ndarray:
        return self.mean_ia + self.mean_ir


@numba.njit(cache=True)
def _rates(beta, beta_a, alpha, N, n_a, n_r, ia, ir):
    i = ia + ir
    s_a = n_a - ia
    inf_a = beta * s_a * i / N
    inf_r = beta * (n_r - ir) * i / N
    per_infected = beta_a * s_a / N + alpha
    return inf_a, inf_r, per_infected * ia, per_infected * ir


@numba.njit(cache=True)
def _ssa_events(rng, beta, beta_a, alpha, N, n_a, n_r, ia, ir, t_end):
    cap = 1024
    ts = np.empty(cap)
    xa = np.empty(cap, dtype=np.int64)
    xr = np.empty(cap, dtype=np.int64)
    ts[0], xa[0], xr[0] = 0.0, ia, ir
    k = 1
    t = 0.0
    while True:
        r0, r1, r2, r3 = _rates(beta, beta_a, alpha, N, n_a, n_r, ia, ir)
        total = r0 + r1 + r2 + r3
        if total <= 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t > t_end:
            break
        u = rng.random() * total
        if u < r0:
            ia += 1
        elif u < r0 + r1:
            ir += 1
        elif u < r0 + r1 + r2:
            ia -= 1
        else:
            ir -= 1
        if k == cap:
            cap *= 2
            ts2 = np.empty(cap)
            xa2 = np.empty(cap, dtype=np.int64)
            xr2 = np.empty(cap, dtype=np.int64)
            ts2[:k], xa2[:k], xr2[:k] = ts[:k], xa[:k], xr[:k]
            ts, xa, xr = ts2, xa2, xr2
        ts[k], xa[k], xr[k] = t, ia, ir
        k += 1
    return ts[:k], xa[:k], xr[:k]


@numba.njit(cache=True)
def _ssa_grid(rng, beta, beta_a, alpha, N, n_a, n_r, ia, ir, grid):
    """Same event sequence as ``_ssa_events``, recorded only on ``grid``."""
    m = grid.shape[0]
    xa = np.empty(m, dtype=np.int64)
    xr = np.empty(m, dtype=np.int64)
    t_end = grid[m - 1]
    j = 0
    t = 0.0
    while True:
        r0, r1, r2, r3 = _rates(beta, beta_a, alpha, N, n_a, n_r, ia, ir)
        total = r0 + r1 + r2 + r3
        t_next = math.inf
        if total > 0.0:
            t_next = t + rng.exponential(1.0 / total)
        while j < m and grid[j] < t_next:
            xa[j], xr[j] = ia, ir
            j += 1
        if t_next > t_end:
            break
        t = t_next
        u = rng.random() * total
        if u < r0:
            ia += 1
        elif u < r0 + r1:
            ir += 1
        elif u < r0 + r1 + r2:
            ia -= 1
        else:
            ir -= 1
    return xa, xr


def replicate_seeds(seed: int, replicates: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(replicates)


def _run_one(cfg: PopulationConfig, seq: np.random.SeedSequence, grid: Optional[np.ndarray]):
    rng = np.random.Generator(np.random.PCG64(seq))
    p = cfg.params
    n_a = cfg.n_active
    args = (rng, p.beta, p.beta_a, p.alpha, float(cfg.N), n_a, cfg.N - n_a, cfg.n_ia, cfg.n_ir)
    if grid is None:
        ts, xa, xr = _ssa_events(*args, float(cfg.t_end))
        return SamplePath(ts, xa, xr, cfg.N, cfg.t_end)
    xa, xr = _ssa_grid(*args, grid)
    return SamplePath(grid.copy(), xa, xr, cfg.N, cfg.t_end, on_grid=True)


def _run_star(job):
    return _run_one(*job)


def uniform_grid(t_end: float, interval: float) -> np.ndarray:
    n = int(math.floor(t_end / interval + 1e-9))
    grid = np.arange(n + 1) * interval
    if t_end - grid[-1] > 1e-12 * t_end:
        grid = np.append(grid, t_end)
    return grid


def simulate_ctmc(
    cfg: PopulationConfig, grid: Optional[Sequence[float]] = None, workers: int = 1
) -> list[SamplePath]:
    """Independent exact sample paths, one per replicate.

    Replicate ``k`` draws from its own PCG64 stream spawned from ``cfg.seed``,
    so results do not depend on ``workers``. With ``grid`` the paths are
    recorded only at those times (which must span ``[0, t_end]``); otherwise the
    full event record is returned.
    """
    g = None
    if grid is not None:
        g = np.asarray(grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0) or g[0] < 0:
            raise ValueError("grid must be a non-empty increasing sequence of times >= 0")
    jobs = [(cfg, seq, g) for seq in replicate_seeds(cfg.seed, cfg.replicates)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_star, jobs))
    return [_run_star(job) for job in jobs]


def summarize(paths: Sequence[SamplePath], grid: Optional[Sequence[float]] = None) -> EnsembleSummary:
    """Mean and (population) standard deviation of infected fractions on a grid."""
    if not paths:
        raise ValueError("empty ensemble")
    N = paths[0].N
    if grid is None:
        grid = paths[0].times if paths[0].on_grid else uniform_grid(paths[0].t_end, paths[0].t_end / 100)
    grid = np.asarray(grid, dtype=float)
    sampled = [p.sample(grid) for p in paths]
    ia = np.array([s[0] for s in sampled], dtype=float) / N
    ir = np.array([s[1] for s in sampled], dtype=float) / N
    extinct = np.mean([(s[0][-1] + s[1][-1]) == 0 for s in sampled])
    return EnsembleSummary(
        t=grid,
        mean_ia=ia.mean(axis=0),
        mean_ir=ir.mean(axis=0),
        sd_ia=ia.std(axis=0),
        sd_ir=ir.std(axis=0),
        extinction_fraction=float(extinct),
        replicates=len(paths),
    )


def with_seed(cfg: PopulationConfig, seed: int) -> PopulationConfig:
    return replace(cfg, seed=seed)
