"""
Seeded Monte Carlo estimators used as the oracle for the closed forms.

A run is split into `chunks` substreams. Chunk i draws from a Philox
generator keyed by the seed and jumped i + 1 times (2^128 draws apart), so
results depend on (seed, chunks) only, never on how many threads execute the
chunks. Partial sums are reduced in chunk order with math.fsum.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ris.analytic import CdfCurve, LN2
from ris.channel import draw_blocks
from ris.errors import DomainError, GridMismatchError

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1
DEFAULT_BATCH_ELEMENTS = 2 ** 20


@dataclass(frozen=True)
class RunSpec:
    seed: int
    trials: int
    chunks: int = 1

    def __post_init__(self):
        for name in ("seed", "trials", "chunks"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise DomainError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 0 <= self.seed <= MAX_SEED:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.chunks < 1:
            raise DomainError(f"chunks must be >= 1, got {self.chunks!r}")
        if self.trials < self.chunks:
            raise DomainError(f"trials ({self.trials}) must be >= chunks ({self.chunks})")

    def chunk_sizes(self):
        base, extra = divmod(self.trials, self.chunks)
        return [base + (1 if i < extra else 0) for i in range(self.chunks)]

    def generator(self, chunk):
        bit_generator = np.random.Philox(key=self.seed).jumped(chunk + 1)
        return np.random.Generator(bit_generator)


@dataclass(frozen=True)
class MetricEstimate:
    value: float
    std_error: float
    num_samples: int

    def __post_init__(self):
        if self.num_samples < 1:
            raise DomainError(f"num_samples must be >= 1, got {self.num_samples!r}")
        if not self.std_error >= 0.0:
            raise DomainError(f"std_error must be >= 0, got {self.std_error!r}")


@dataclass(frozen=True)
class GainSamples:
    """|Ξ|² draws, one array per chunk in chunk order."""

    chunks: tuple

    @property
    def num_samples(self):
        return sum(len(c) for c in self.chunks)

    def sorted(self):
        return np.sort(np.concatenate(self.chunks))


def batch_size(scenario, batch_elements=DEFAULT_BATCH_ELEMENTS):
    per_block = max(1, scenario.total_elements)
    return max(1, batch_elements // per_block)


def _sample_chunk(scenario, run, chunk, size, batch):
    started = time.perf_counter()
    rng = run.generator(chunk)
    gains = np.empty(size)
    done = 0
    while done < size:
        step = min(batch, size - done)
        gains[done:done + step] = draw_blocks(scenario, rng, step).gains
        done += step
    logger.debug(
        "chunk %d: %d blocks in %.2fs (batch %d)", chunk, size, time.perf_counter() - started, batch
    )
    return gains


def sample_gains(scenario, run, *, threads=1, batch_elements=DEFAULT_BATCH_ELEMENTS):
    """Draw run.trials values of |Ξ|²; γ = p·|Ξ|² for any transmit SNR p."""
    batch = batch_size(scenario, batch_elements)
    sizes = run.chunk_sizes()

    def work(chunk):
        return _sample_chunk(scenario, run, chunk, sizes[chunk], batch)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            arrays = list(pool.map(work, range(run.chunks)))
    else:
        arrays = [work(chunk) for chunk in range(run.chunks)]
    return GainSamples(tuple(arrays))


def _check_p(p_linear):
    if not p_linear > 0:
        raise DomainError(f"p_linear must be > 0, got {p_linear!r}")


def outage_from_gains(samples, p_linear, gamma_th):
    _check_p(p_linear)
    n = samples.num_samples
    hits = sum(int(np.count_nonzero(p_linear * g < gamma_th)) for g in samples.chunks)
    value = hits / n
    return MetricEstimate(value, math.sqrt(value * (1.0 - value) / n), n)


def spectral_efficiency_from_gains(samples, p_linear):
    _check_p(p_linear)
    n = samples.num_samples
    rates = [np.log1p(p_linear * g) / LN2 for g in samples.chunks]
    mean = math.fsum(float(np.sum(r)) for r in rates) / n
    if n == 1:
        return MetricEstimate(mean, 0.0, n)
    spread = math.fsum(float(np.sum((r - mean) ** 2)) for r in rates)
    return MetricEstimate(mean, math.sqrt(spread / (n - 1) / n), n)


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise DomainError("grid must be one-dimensional")
    if np.any(grid < 0.0) or np.any(np.diff(grid) < 0.0):
        raise DomainError("grid must be sorted and nonnegative")
    return grid


def cdf_from_gains(samples, p_linear, grid):
    """Fraction of draws with γ < x at every grid point, from one draw set."""
    _check_p(p_linear)
    grid = _check_grid(grid)
    snr = p_linear * samples.sorted()
    counts = np.searchsorted(snr, grid, side="left")
    return CdfCurve(tuple(grid.tolist()), tuple((counts / samples.num_samples).tolist()))


def estimate_outage(scenario, p_linear, gamma_th, run, *, threads=1):
    return outage_from_gains(sample_gains(scenario, run, threads=threads), p_linear, gamma_th)


def estimate_spectral_efficiency(scenario, p_linear, run, *, threads=1):
    return spectral_efficiency_from_gains(sample_gains(scenario, run, threads=threads), p_linear)


def empirical_cdf(scenario, p_linear, grid, run, *, threads=1):
    return cdf_from_gains(sample_gains(scenario, run, threads=threads), p_linear, grid)


def ks_distance(a, b):
    """Largest pointwise gap between two CDF curves on the same grid."""
    if a.grid != b.grid:
        raise GridMismatchError("CDF curves are evaluated on different grids")
    if not a.values:
        return 0.0
    return max(abs(x - y) for x, y in zip(a.values, b.values))
