"""Linear systematic sampling: random start, every k-th unit, full enumeration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .population import Population, interval


@dataclass(frozen=True, eq=False)
class SystematicSample:
    """One of the ``interval_k`` possible systematic samples.

    ``start`` is 1-based; ``indices`` are the 0-based population positions
    ``start - 1 + j * interval_k`` for ``j = 0..n-1``.
    """

    start: int
    interval_k: int
    y: np.ndarray
    x: np.ndarray

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def indices(self) -> np.ndarray:
        return self.start - 1 + self.interval_k * np.arange(self.n)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.y.tolist(), self.x.tolist()))

    @property
    def mean_y_star(self) -> float:
        return float(self.y.mean())

    @property
    def mean_x_star(self) -> float:
        return float(self.x.mean())


def draw_sample(pop: Population, n: int, start: int) -> SystematicSample:
    """Systematic sample of size ``n`` beginning at 1-based unit ``start``."""
    k = interval(pop.N, n)
    if not 1 <= start <= k:
        raise DataError(f"start={start} outside 1..{k}")
    sl = slice(start - 1, None, k)
    return SystematicSample(start=start, interval_k=k, y=pop.y[sl], x=pop.x[sl])


def enumerate_samples(pop: Population, n: int) -> list[SystematicSample]:
    """All ``N // n`` systematic samples, ordered by start."""
    k = interval(pop.N, n)
    return [draw_sample(pop, n, start) for start in range(1, k + 1)]


def random_start(interval_k: int, seed: int = 0) -> int:
    """Uniform random start in ``1..interval_k``.

    Uses numpy's PCG64 bit generator seeded with ``seed`` and
    ``Generator.integers``, so the result is reproducible across platforms
    for a given numpy major version.
    """
    if interval_k < 1:
        raise DataError(f"interval_k must be >= 1, got {interval_k}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return int(rng.integers(1, interval_k + 1))
