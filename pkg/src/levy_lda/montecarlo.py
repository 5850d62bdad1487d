"""Monte Carlo oracle: simulated annual losses, blocked empirical CDFs and the
truncation and timing studies built on them.

Years are simulated in blocks. Block ``b`` of cell ``j`` draws from its own
PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(b, j))``, so results are
bit-identical whatever the number of worker threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aggregate import AggregateModel
from .compound import CompoundModel, cdf_capped, term_matrix
from .stable import Form, sample_levy_inverse, sample_stable_cms

__all__ = [
    "SimulationConfig",
    "EmpiricalCdf",
    "TimingResult",
    "default_grid",
    "simulate_years",
    "simulate_aggregate_years",
    "empirical_cdf",
    "truncation_study",
    "timing_study",
]

#: severity draws generated at once
_DRAW_CHUNK = 4_000_000
#: a single simulated year may not exceed this many losses
MAX_YEAR_COUNT = 10**10


def default_grid() -> np.ndarray:
    return np.linspace(1.0, 200.0, 200)


@dataclass(frozen=True)
class SimulationConfig:
    years: int = 200_000
    block_size: int = 50_000
    seed: int = 0
    grid: np.ndarray = field(default_factory=default_grid)
    threads: int = 1
    #: "inverse" (closed-form inverse CDF) or "cms" (Chambers-Mallows-Stuck)
    sampler: str = "inverse"

    def __post_init__(self):
        if self.years < 1 or self.block_size < 1:
            raise ValueError("years and block_size must be positive")
        if self.years % self.block_size:
            raise ValueError(
                f"block_size {self.block_size} does not divide years {self.years}"
            )
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if self.sampler not in ("inverse", "cms"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    @property
    def n_blocks(self) -> int:
        return self.years // self.block_size


@dataclass(frozen=True)
class EmpiricalCdf:
    grid: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    n_blocks: int


@dataclass(frozen=True)
class TimingResult:
    closed_form_seconds: float
    monte_carlo_seconds: float

    @property
    def ratio(self) -> float:
        if self.monte_carlo_seconds == 0.0:
            return math.nan
        return self.closed_form_seconds / self.monte_carlo_seconds


def _rng(seed: int, block: int, cell: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, cell))))


def _severity_draws(m: CompoundModel, rng, size: int, sampler: str) -> np.ndarray:
    if sampler == "cms":
        return sample_stable_cms(m.severity.to_stable(Form.S1), rng, size)
    return sample_levy_inverse(m.severity, rng, size)


def _block_losses(m: CompoundModel, cfg: SimulationConfig, block: int, cell: int) -> np.ndarray:
    rng = _rng(cfg.seed, block, cell)
    counts = np.asarray(m.frequency.sample(rng, cfg.block_size), dtype=np.int64)
    if counts.size and counts.max() > MAX_YEAR_COUNT:
        raise ValueError(f"a simulated year has {counts.max()} losses, above {MAX_YEAR_COUNT}")
    out = np.zeros(cfg.block_size)
    # walk the years so that each batch holds about _DRAW_CHUNK losses
    ends = np.cumsum(counts)
    start_year = 0
    while start_year < cfg.block_size:
        base = ends[start_year - 1] if start_year else 0
        stop = int(np.searchsorted(ends, base + _DRAW_CHUNK, side="right"))
        if stop == start_year:
            # one year larger than a chunk: sum its losses piecewise
            left, acc = int(counts[start_year]), 0.0
            while left:
                k = min(left, _DRAW_CHUNK)
                acc += float(_severity_draws(m, rng, k, cfg.sampler).sum())
                left -= k
            out[start_year] = acc
            start_year += 1
            continue
        c = counts[start_year:stop]
        draws = _severity_draws(m, rng, int(c.sum()), cfg.sampler)
        years = np.repeat(np.arange(c.size), c)
        out[start_year:stop] = np.bincount(years, weights=draws, minlength=c.size)
        start_year = stop
    return out


def _run_blocks(fn, cfg: SimulationConfig) -> np.ndarray:
    blocks = range(cfg.n_blocks)
    if cfg.threads == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(fn, blocks))
    return np.concatenate(parts)


def simulate_years(m: CompoundModel, cfg: SimulationConfig, cell: int = 0) -> np.ndarray:
    """Annual losses for ``cfg.years`` simulated years, in block order."""
    return _run_blocks(lambda b: _block_losses(m, cfg, b, cell), cfg)


def simulate_aggregate_years(a: AggregateModel, cfg: SimulationConfig) -> np.ndarray:
    """Annual institution-wide losses: independent cells simulated and added."""

    def block(b):
        return sum(_block_losses(c, cfg, b, j) for j, c in enumerate(a.cells))

    return _run_blocks(block, cfg)


def empirical_cdf(losses, cfg: SimulationConfig) -> EmpiricalCdf:
    """Pooled ``P(Z <= z)`` on the grid with the spread of per-block estimates as error."""
    losses = np.asarray(losses, dtype=float).reshape(-1)
    if losses.size == 0:
        raise ValueError("losses must be nonempty")
    if losses.size % cfg.block_size:
        raise ValueError("number of losses is not a multiple of block_size")
    n_blocks = losses.size // cfg.block_size
    if n_blocks < 2:
        raise ValueError("need at least 2 blocks for a standard error")
    blocks = np.sort(losses.reshape(n_blocks, cfg.block_size), axis=1)
    per_block = np.stack(
        [np.searchsorted(row, cfg.grid, side="right") / cfg.block_size for row in blocks]
    )
    estimate = per_block.mean(axis=0)
    std_error = per_block.std(axis=0, ddof=1) / math.sqrt(n_blocks)
    return EmpiricalCdf(cfg.grid.copy(), estimate, std_error, n_blocks)


def truncation_study(m: CompoundModel, caps, grid, reference_cap: int = 1000) -> np.ndarray:
    """Mean squared difference on ``grid`` between the CDF truncated at each cap and at ``reference_cap``.

    Counts are summed from 1, so a cap is an upper count bound only. Caps may
    exceed the reference.
    """
    caps = np.asarray(caps, dtype=np.int64).reshape(-1)
    if caps.size and (np.any(caps < 1) or np.any(np.diff(caps) <= 0)):
        raise ValueError("caps must be positive and strictly increasing")
    if reference_cap < 1:
        raise ValueError("reference_cap must be positive")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    top = int(max(reference_cap, caps.max() if caps.size else 0))
    # terms past the reach of the largest grid point are below erfc(8) and dropped
    reach = m.reach(float(grid.max())) if grid.size else 1
    n, terms = term_matrix(m, grid, min(top, reach))
    partial = np.cumsum(terms, axis=1)

    def upto(cap):
        k = int(np.searchsorted(n, cap, side="right"))
        return partial[:, k - 1] if k else np.zeros(grid.size)

    ref = upto(reference_cap)
    out = np.empty(caps.size)
    for i, cap in enumerate(caps):
        out[i] = np.mean((upto(cap) - ref) ** 2) if grid.size else 0.0
    return out


def timing_study(
    m: CompoundModel, cfg: SimulationConfig, n_cap: int = 1000, repeats: int = 3
) -> TimingResult:
    """Wall time of the closed form (``n_cap`` terms) versus simulate-and-tabulate.

    Each path is timed ``repeats`` times and the fastest run is reported.
    """
    grid = cfg.grid

    def best_of(fn):
        best = math.inf
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            if grid.size:
                fn()
            best = min(best, time.perf_counter() - t0)
        return best

    closed = best_of(lambda: cdf_capped(m, grid, n_cap))
    mc = best_of(lambda: empirical_cdf(simulate_years(m, cfg), cfg))
    return TimingResult(closed, mc)

