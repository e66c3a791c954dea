"""Exact design moments by enumeration, synthetic populations, and sweeps.

With only ``interval_k`` possible samples, evaluating an estimator on every
start gives its exact design expectation and MSE, which is the ground truth
the first-order formulas in :mod:`syssampling.theory` are checked against.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .design import enumerate_samples
from .errors import DataError, NumericalError, SamplingError
from .estimators import ESTIMATORS, estimate, optimal_constants
from .population import (
    Population,
    SummaryStats,
    interval,
    moments_from_population,
    moments_from_summary,
)
from . import theory

ARRANGEMENTS = ("shuffled", "sorted_by_x", "periodic")

# floor for relative errors against an exact value of zero
REL_ERROR_FLOOR = 1e-300

# PRE of the optimal transformed estimator reported for the forest-block
# population; the sweep looks for the intraclass correlation matching it
REFERENCE_PRE_T4 = 468.68


@dataclass(frozen=True)
class ExactMoments:
    estimator: str
    expectation: float
    bias: float
    mse: float
    per_start_values: tuple[float, ...]

    @property
    def variance(self) -> float:
        v = np.asarray(self.per_start_values)
        return float(np.mean((v - v.mean()) ** 2))


def exact_design_eval(
    pop: Population,
    n: int,
    estimator: str,
    *,
    cap_n: int | None = None,
    k1: float | None = None,
    k2: float | None = None,
) -> ExactMoments:
    """Evaluate ``estimator`` on every systematic sample of size ``n``.

    The MSE is taken about the true population mean, so it includes the
    squared design bias.
    """
    if estimator == "t4" and cap_n is None:
        cap_n = pop.N
    ybar, xbar = pop.mean_y, pop.mean_x
    values = []
    for s in enumerate_samples(pop, n):
        try:
            values.append(estimate(estimator, s, xbar, cap_n=cap_n, k1=k1, k2=k2))
        except NumericalError as exc:
            raise NumericalError(f"{estimator} undefined at start {s.start}: {exc}") from exc
    v = np.array(values)
    expectation = float(v.mean())
    return ExactMoments(
        estimator=estimator,
        expectation=expectation,
        bias=expectation - ybar,
        mse=float(np.mean((v - ybar) ** 2)),
        per_start_values=tuple(values),
    )


@dataclass(frozen=True)
class ComparisonRow:
    """First-order value against the enumerated one.

    ``quantity`` is ``"mse"`` (variance for t0) or ``"bias"``.
    """

    estimator: str
    quantity: str
    theory_value: float
    exact_value: float

    @property
    def rel_error(self) -> float:
        return abs(self.theory_value - self.exact_value) / max(abs(self.exact_value), REL_ERROR_FLOOR)


def compare_theory_exact(
    pop: Population,
    n: int,
    estimators: Iterable[str] = ESTIMATORS,
    cap_n: int | None = None,
) -> list[ComparisonRow]:
    """MSE rows for every estimator, then bias rows for t3 and t4.

    t4 is evaluated at the optimal constants of the population's own moments.
    """
    estimators = list(estimators)
    for name in estimators:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}")
    m = moments_from_population(pop, n)
    cap_n = pop.N if cap_n is None else cap_n
    tc = optimal_constants(m, cap_n) if "t4" in estimators else None
    exact = {}
    for name in estimators:
        kw = {"cap_n": cap_n, "k1": tc.k1, "k2": tc.k2} if name == "t4" else {}
        exact[name] = exact_design_eval(pop, n, name, **kw)
    rows = [
        ComparisonRow(name, "mse", theory.theory_mse(name, m, cap_n), exact[name].mse)
        for name in estimators
    ]
    rows += [
        ComparisonRow(name, "bias", theory.theory_bias(name, m, cap_n), exact[name].bias)
        for name in estimators
        if name in ("t3", "t4")
    ]
    return rows


def _standardize(z: np.ndarray) -> np.ndarray:
    z = z - z.mean()
    return z / z.std(ddof=1)


def _unit_ss(z: np.ndarray) -> np.ndarray:
    return z / math.sqrt(z @ z)


def _correlated_pair(zx: np.ndarray, noise: np.ndarray, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm ``(zx, zy)`` with ``zx @ zy == rho``.

    Both inputs must already lie in the subspace of interest (e.g. centred);
    ``noise`` is orthogonalised against ``zx`` inside it.
    """
    zx = _unit_ss(zx)
    perp = _unit_ss(noise - (noise @ zx) * zx)
    return zx, rho * zx + math.sqrt(1.0 - rho * rho) * perp


def _periodic_scores(
    rng: np.random.Generator, n: int, k: int, rho: float, share: float
) -> tuple[np.ndarray, np.ndarray]:
    """Periodic component (one value per start) plus within-sample noise.

    Both parts carry correlation ``rho`` and the same variance share for x
    and y, so the covariance of the sample means is exactly
    ``sqrt(f_y f_x) * rho`` times the unit-level scale.  The periodic values
    come in sign-flipped pairs across starts (when ``k >= 4``), which makes
    every odd design moment of the sample means vanish.
    """
    if k >= 4:
        half = rng.standard_normal((2, k // 2))
        bx, by = (np.concatenate([h, -h, np.zeros(k % 2)]) for h in half)
    else:
        bx, by = rng.standard_normal((2, k))
        bx, by = bx - bx.mean(), by - by.mean()
    bx, by = _correlated_pair(np.tile(bx, n), np.tile(by, n), rho)
    if share >= 1.0:
        return bx, by
    if n < 2:
        raise DataError("within-sample noise needs n >= 2")
    wx, wy = rng.standard_normal((2, n, k))
    # centre every column (sample) so noise leaves sample means untouched
    wx = (wx - wx.mean(axis=0)).ravel()
    wy = (wy - wy.mean(axis=0)).ravel()
    wx, wy = _correlated_pair(wx, wy, rho)
    a, b = math.sqrt(share), math.sqrt(1.0 - share)
    return a * bx + b * wx, a * by + b * wy


def generate_population(
    N: int,
    n: int,
    rho_target: float,
    cv_y: float,
    cv_x: float,
    arrangement: str = "shuffled",
    seed: int = 0,
    *,
    mean_y: float = 100.0,
    mean_x: float = 50.0,
    periodic_share: float = 1.0,
) -> Population:
    """Synthetic bivariate population with exact means, CVs and correlation.

    Unit scores are Gaussian draws orthogonalised so that the population
    correlation equals ``rho_target`` and the CVs (divisor ``N - 1``) equal
    ``cv_y`` and ``cv_x`` up to rounding.  Arrangements:

    * ``shuffled``: units in random order (intraclass correlation near
      ``-1/(N-1)``);
    * ``sorted_by_x``: ascending x, so every sample spans the range and the
      intraclass correlation is negative;
    * ``periodic``: a component with period ``interval_k`` carrying
      ``periodic_share`` of the variance plus within-sample noise.  The
      intraclass correlation is ``(n*share - 1)/(n - 1)``; the default share
      of 1 repeats the same ``interval_k`` units, giving exactly 1.
    """
    k = interval(N, n)
    if arrangement not in ARRANGEMENTS:
        raise DataError(f"unknown arrangement {arrangement!r}; expected one of {ARRANGEMENTS}")
    if not -1.0 < rho_target < 1.0:
        raise DataError(f"rho_target must lie in (-1, 1), got {rho_target}")
    if cv_y <= 0 or cv_x <= 0:
        raise DataError("cv_y and cv_x must be positive")
    if mean_y <= 0 or mean_x <= 0:
        raise DataError("mean_y and mean_x must be positive")
    if not 0.0 < periodic_share <= 1.0:
        raise DataError(f"periodic_share must lie in (0, 1], got {periodic_share}")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if arrangement == "periodic":
        if k < 3:
            raise DataError(f"periodic arrangement needs interval_k >= 3, got {k}")
        zx, zy = _periodic_scores(rng, n, k, rho_target, periodic_share)
    else:
        if N < 3:
            raise DataError("need at least 3 units")
        zx, zy = rng.standard_normal((2, N))
        zx, zy = _correlated_pair(zx - zx.mean(), zy - zy.mean(), rho_target)
    zx, zy = _standardize(zx), _standardize(zy)
    if arrangement == "sorted_by_x":
        order = np.argsort(zx, kind="stable")
        zx, zy = zx[order], zy[order]

    x = mean_x * (1.0 + cv_x * zx)
    y = mean_y * (1.0 + cv_y * zy)
    if x.min() <= 0 or y.min() <= 0:
        raise DataError("infeasible positivity: CVs too large for positive values")
    return Population(y, x)


def make_grid(lo: float, hi: float, step: float) -> list[float]:
    """Points ``lo, lo+step, ...`` up to ``hi`` (inclusive when on step)."""
    if not step > 0:
        raise DataError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise DataError(f"grid upper bound {hi} below lower bound {lo}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


@dataclass(frozen=True)
class SweepRow:
    rho_w: float
    pre_t1: float
    pre_t2: float
    pre_t3: float
    pre_t4: float
    k1: float
    k2: float
    status: str = "ok"


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    target: float
    cap_n: int

    @property
    def best(self) -> SweepRow | None:
        """Row whose PRE(t4) is closest to the target (first on ties)."""
        ok = [r for r in self.rows if r.status == "ok"]
        if not ok:
            return None
        return min(ok, key=lambda r: abs(r.pre_t4 - self.target))


def _sweep_point(s: SummaryStats, rho_w: float, cap_n: int) -> SweepRow:
    m = moments_from_summary(replace(s, rho_wy=rho_w, rho_wx=rho_w))
    try:
        table = {row.estimator: row for row in theory.pre_table(m, cap_n)}
        tc = optimal_constants(m, cap_n)
    except SamplingError:
        return SweepRow(rho_w, *([math.nan] * 6), status="singular")
    return SweepRow(
        rho_w,
        table["t1"].pre,
        table["t2"].pre,
        table["t3"].pre,
        table["t4"].pre,
        tc.k1,
        tc.k2,
        table["t4"].status,
    )


def rho_sweep_t4(
    s: SummaryStats,
    grid: Sequence[float],
    cap_n: int | None = None,
    *,
    target: float = REFERENCE_PRE_T4,
    workers: int = 1,
) -> SweepResult:
    """PRE of every estimator as the common intraclass correlation varies.

    ``s.rho_wy`` and ``s.rho_wx`` are ignored; both are set to each grid
    value in turn.  Rows keep grid order whatever ``workers`` is.
    """
    cap_n = s.N if cap_n is None else cap_n
    lower = -1.0 / (s.n - 1) if s.n > 1 else -math.inf
    for r in grid:
        if not lower < r <= 1.0:
            raise DataError(f"grid value {r} outside ({lower:.6g}, 1]")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _sweep_point(s, r, cap_n), grid))
    else:
        rows = [_sweep_point(s, r, cap_n) for r in grid]
    return SweepResult(tuple(rows), target, cap_n)


def forest_summary(rho_w: float = 0.0) -> SummaryStats:
    """Published particulars of the 176-block forest population (n = 16).

    Only the within-sample intraclass correlation is not published; it is
    supplied as ``rho_w`` for both variates.
    """
    return SummaryStats(
        N=176,
        n=16,
        mean_y=282.6136,
        mean_x=6.9943,
        s2_y=24114.67,
        s2_x=8.76,
        rho=0.871,
        rho_wy=rho_w,
        rho_wx=rho_w,
    )

