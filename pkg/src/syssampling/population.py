"""Population data model and the design moments derived from it.

Two routes lead to a :class:`MomentSet`: raw unit data
(:func:`moments_from_population`) or published summary statistics
(:func:`moments_from_summary`).  The first route is implemented on top of the
second, so both always agree.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DataError, DegenerateVariateError


@dataclass(frozen=True, eq=False)
class Population:
    """Ordered finite population of ``(y, x)`` units.

    Order is significant: a systematic sample takes every ``interval_k``-th
    unit, so permuting the rows changes the design.
    """

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        x = np.array(self.x, dtype=float)
        if y.ndim != 1 or y.shape != x.shape:
            raise DataError("y and x must be 1-d arrays of equal length")
        if y.size < 2:
            raise DataError(f"population needs at least 2 units, got {y.size}")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return int(self.y.size)

    @property
    def units(self) -> list[tuple[float, float]]:
        return list(zip(self.y.tolist(), self.x.tolist()))

    @property
    def mean_y(self) -> float:
        return float(self.y.mean())

    @property
    def mean_x(self) -> float:
        return float(self.x.mean())

    def __len__(self) -> int:
        return self.N

    def __repr__(self) -> str:
        return f"Population(N={self.N}, mean_y={self.mean_y:.6g}, mean_x={self.mean_x:.6g})"


@dataclass(frozen=True)
class SummaryStats:
    """Population particulars as published in survey reports.

    Variances use divisor ``N - 1``.  ``rho_wy`` and ``rho_wx`` are the
    within-sample intraclass correlations of y and x.
    """

    N: int
    n: int
    mean_y: float
    mean_x: float
    s2_y: float
    s2_x: float
    rho: float
    rho_wy: float
    rho_wx: float

    def __post_init__(self):
        interval(self.N, self.n)
        for name in ("mean_y", "mean_x", "s2_y", "s2_x", "rho", "rho_wy", "rho_wx"):
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"{name} must be finite")
        if self.s2_y < 0 or self.s2_x < 0:
            raise DataError("variances must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise DataError(f"rho must lie in [-1, 1], got {self.rho}")
        for name in ("rho_wy", "rho_wx"):
            if 1 + (self.n - 1) * getattr(self, name) < -1e-12:
                raise DataError(
                    f"{name}={getattr(self, name)} makes 1 + (n-1)*{name} negative"
                )

    @property
    def interval_k(self) -> int:
        return self.N // self.n


@dataclass(frozen=True)
class MomentSet:
    """Design moments used by every first-order formula.

    ``c0sq``, ``c1sq`` and ``c0c1`` are the relative error moments
    ``E(e0^2)/theta``, ``E(e1^2)/theta`` and ``E(e0 e1)/theta``, i.e. the
    CVs inflated by the intraclass factors ``f_y`` and ``f_x``.  ``k_coef``
    is ``rho * C_y / C_x`` (not the sampling interval).
    """

    N: int
    n: int
    mean_y: float
    mean_x: float
    rho: float
    rho_wy: float
    rho_wx: float
    theta: float
    cy2: float
    cx2: float
    f_y: float
    f_x: float
    c0sq: float
    c1sq: float
    c0c1: float
    rho_star: float
    k_coef: float

    @property
    def interval_k(self) -> int:
        return self.N // self.n

    @property
    def e00(self) -> float:
        """E(e0^2)."""
        return self.theta * self.c0sq

    @property
    def e11(self) -> float:
        """E(e1^2)."""
        return self.theta * self.c1sq

    @property
    def e01(self) -> float:
        """E(e0 e1)."""
        return self.theta * self.c0c1


def interval(N: int, n: int) -> int:
    """Sampling interval ``N // n``; raises unless ``n`` divides ``N``."""
    if int(N) != N or int(n) != n:
        raise DataError("N and n must be integers")
    if n < 1 or N < 1:
        raise DataError(f"N and n must be positive, got N={N}, n={n}")
    if N % n:
        raise DataError(f"N={N} is not a multiple of n={n}")
    return N // n


def load_population(records: Iterable[Sequence[float]]) -> Population:
    """Pack ``(y, x)`` records into a :class:`Population`, keeping their order."""
    ys, xs = [], []
    for i, rec in enumerate(records):
        if len(rec) != 2:
            raise DataError(f"row {i}: expected (y, x), got {len(rec)} values")
        y, x = float(rec[0]), float(rec[1])
        if not (math.isfinite(y) and math.isfinite(x)):
            raise DataError(f"row {i}: non-finite value")
        ys.append(y)
        xs.append(x)
    if not ys:
        raise DataError("empty population")
    if len(ys) < 2:
        raise DataError("population needs at least 2 units")
    return Population(np.array(ys), np.array(xs))


def read_population(source: str | os.PathLike | TextIO) -> Population:
    """Read a ``y,x`` delimited file.

    Row numbers in error messages are 1-based file lines (the header is
    line 1).
    """
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, newline="", encoding="utf-8") as fh:
                return read_population(fh)
        except OSError as exc:
            raise DataError(f"cannot read {source}: {exc.strerror}") from exc

    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise DataError("empty population")
    if [h.strip().lower() for h in header] != ["y", "x"]:
        raise DataError(f"line 1: expected header 'y,x', got {','.join(header)!r}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            y, x = float(row[0]), float(row[1])
        except ValueError:
            raise DataError(f"line {lineno}: unparsable number in {row!r}") from None
        if not (math.isfinite(y) and math.isfinite(x)):
            raise DataError(f"line {lineno}: non-finite value")
        records.append((y, x))
    return load_population(records)


def write_population(pop: Population, dest: str | os.PathLike | TextIO) -> None:
    """Write ``pop`` in the ``y,x`` file format (shortest round-trip reprs)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_population(pop, fh)
        return
    dest.write("y,x\n")
    for y, x in pop.units:
        dest.write(f"{y!r},{x!r}\n")


def population_to_text(pop: Population) -> str:
    buf = io.StringIO()
    write_population(pop, buf)
    return buf.getvalue()


def intraclass_correlation(values: Sequence[float], n: int, k: int) -> float:
    """Within-sample intraclass correlation of a systematically ordered list.

    Sample ``i`` holds units ``i, i+k, ..., i+(n-1)k``.  The result is the
    sum of cross-products of deviations over ordered within-sample pairs,
    divided by ``(n - 1)`` times the total sum of squares, and lies in
    ``[-1/(n-1), 1]``.  For ``n == 1`` there are no pairs and 0 is returned.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size != n * k:
        raise DataError(f"expected {n * k} values (n={n}, k={k}), got {v.size}")
    d = v - v.mean()
    ss = float(d @ d)
    if np.ptp(v) == 0.0 or ss == 0.0:
        raise DegenerateVariateError("all values equal; intraclass correlation undefined")
    if n == 1:
        return 0.0
    # row i of the (n, k) reshape is position j across samples; column = sample
    grid = d.reshape(n, k)
    col_sums = grid.sum(axis=0)
    cross = float(col_sums @ col_sums) - ss
    return cross / ((n - 1) * ss)


def moments_from_summary(s: SummaryStats) -> MomentSet:
    if s.mean_y == 0:
        raise DegenerateVariateError("mean_y is zero; C_y undefined")
    if s.mean_x == 0:
        raise DegenerateVariateError("mean_x is zero; C_x undefined")
    cy2 = s.s2_y / s.mean_y**2
    cx2 = s.s2_x / s.mean_x**2
    # clamp tiny negative rounding in 1 + (n-1) rho_w
    f_y = max(1.0 + (s.n - 1) * s.rho_wy, 0.0)
    f_x = max(1.0 + (s.n - 1) * s.rho_wx, 0.0)
    c0c1 = math.sqrt(f_y * f_x) * s.rho * math.sqrt(cy2 * cx2)
    return MomentSet(
        N=s.N,
        n=s.n,
        mean_y=s.mean_y,
        mean_x=s.mean_x,
        rho=s.rho,
        rho_wy=s.rho_wy,
        rho_wx=s.rho_wx,
        theta=(s.N - 1) / (s.N * s.n),
        cy2=cy2,
        cx2=cx2,
        f_y=f_y,
        f_x=f_x,
        c0sq=f_y * cy2,
        c1sq=f_x * cx2,
        c0c1=c0c1,
        rho_star=math.sqrt(f_y / f_x) if f_x > 0 else math.inf,
        k_coef=s.rho * math.sqrt(cy2 / cx2) if cx2 > 0 else math.nan,
    )


def summarize(pop: Population, n: int) -> SummaryStats:
    """Summary statistics of ``pop`` under systematic samples of size ``n``."""
    k = interval(pop.N, n)
    y, x = pop.y, pop.x
    dy, dx = y - y.mean(), x - x.mean()
    ssy, ssx = float(dy @ dy), float(dx @ dx)
    if np.ptp(y) == 0.0:
        raise DegenerateVariateError("degenerate study variate: y is constant")
    if np.ptp(x) == 0.0:
        raise DegenerateVariateError("degenerate auxiliary variate: x is constant")
    return SummaryStats(
        N=pop.N,
        n=n,
        mean_y=float(y.mean()),
        mean_x=float(x.mean()),
        s2_y=ssy / (pop.N - 1),
        s2_x=ssx / (pop.N - 1),
        rho=float(np.clip((dy @ dx) / math.sqrt(ssy * ssx), -1.0, 1.0)),
        rho_wy=intraclass_correlation(y, n, k),
        rho_wx=intraclass_correlation(x, n, k),
    )


def moments_from_population(pop: Population, n: int) -> MomentSet:
    """Design moments of ``pop`` for systematic samples of size ``n``."""
    return moments_from_summary(summarize(pop, n))
