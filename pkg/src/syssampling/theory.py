"""First-order variance, bias and MSE of the estimators, and the PRE table.

All formulas are functions of a :class:`~syssampling.population.MomentSet`.
Variances are written in the canonical ``C0^2 +/- 2 C0C1 + C1^2`` form; the
``rho_star``-factored forms are provided for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import (
    TransformConstants,
    optimal_constants,
    t4_bias_vector,
    t4_quadratic,
)
from .population import MomentSet


def _cancel(total: float, *terms: float) -> float:
    """Zero out a sum whose size is within rounding of its terms."""
    if abs(total) <= 16 * np.finfo(float).eps * sum(abs(t) for t in terms):
        return 0.0
    return total


def var_t0(m: MomentSet) -> float:
    """Variance of the sample mean; exact under linear systematic sampling."""
    return m.theta * m.mean_y**2 * m.c0sq


def var_t1(m: MomentSet) -> float:
    s = _cancel(m.c0sq + m.c1sq - 2 * m.c0c1, m.c0sq, m.c1sq, 2 * m.c0c1)
    return m.theta * m.mean_y**2 * s


def var_t2(m: MomentSet) -> float:
    s = _cancel(m.c0sq + m.c1sq + 2 * m.c0c1, m.c0sq, m.c1sq, 2 * m.c0c1)
    return m.theta * m.mean_y**2 * s


def var_t1_factored(m: MomentSet) -> float:
    """``theta Ybar^2 f_x (rho*^2 Cy^2 + (1 - 2 k rho*) Cx^2)``."""
    rs = m.rho_star
    return m.theta * m.mean_y**2 * m.f_x * (rs**2 * m.cy2 + (1 - 2 * m.k_coef * rs) * m.cx2)


def var_t2_factored(m: MomentSet) -> float:
    rs = m.rho_star
    return m.theta * m.mean_y**2 * m.f_x * (rs**2 * m.cy2 + (1 + 2 * m.k_coef * rs) * m.cx2)


def bias_t3(m: MomentSet) -> float:
    return m.mean_y * m.theta * (3 * m.c1sq / 8 - m.c0c1 / 2)


def mse_t3(m: MomentSet) -> float:
    s = _cancel(m.c0sq + m.c1sq / 4 - m.c0c1, m.c0sq, m.c1sq / 4, m.c0c1)
    return m.theta * m.mean_y**2 * s


def _z(k1: float, k2: float) -> np.ndarray:
    return np.array([k1, k2, 1.0])


def bias_t4(m: MomentSet, k1: float, k2: float, cap_n: int | None = None) -> float:
    """``Ybar[(k1-1) + k1*A2] + k2*Xbar*theta*C1^2/(2(1+N))``."""
    cap_n = m.N if cap_n is None else cap_n
    return float(t4_bias_vector(m, cap_n) @ _z(k1, k2))


def mse_t4(m: MomentSet, k1: float, k2: float, cap_n: int | None = None) -> float:
    cap_n = m.N if cap_n is None else cap_n
    z = _z(k1, k2)
    return float(z @ t4_quadratic(m, cap_n) @ z)


def mse_t4_a_form(m: MomentSet, k1: float, k2: float, tc: TransformConstants) -> float:
    """Same quadratic written through ``A1``..``A5``.

    ``Ybar^2[k1^2(1+A1) - 2k1(1+A2) + 1] + k2^2 A3 - k2 A4 + 2 k1 k2 A5``
    """
    Y2 = m.mean_y**2
    return (
        Y2 * (k1 * k1 * (1 + tc.a1) - 2 * k1 * (1 + tc.a2) + 1)
        + k2 * k2 * tc.a3
        - k2 * tc.a4
        + 2 * k1 * k2 * tc.a5
    )


def mse_t4_min(m: MomentSet, cap_n: int | None = None) -> tuple[TransformConstants, float]:
    """Optimal constants and the minimised first-order MSE of ``t4``."""
    tc = optimal_constants(m, cap_n)
    return tc, mse_t4(m, tc.k1, tc.k2, tc.cap_n)


@dataclass(frozen=True)
class TheoreticalMoments:
    """One row of the PRE table.

    ``status`` is ``"ok"``, ``"exact"`` (zero MSE; ``pre`` is ``inf``) or
    ``"invalid"`` (negative first-order MSE; ``pre`` is ``nan``).
    """

    estimator: str
    variance_or_mse: float
    bias: float
    pre: float
    status: str = "ok"


def _row(name: str, value: float, bias: float, v0: float) -> TheoreticalMoments:
    # tolerance for calling a cancelled MSE exactly zero
    tiny = 1e-13 * max(v0, 1e-300)
    if abs(value) <= tiny:
        return TheoreticalMoments(name, value, bias, math.inf, "exact")
    if value < 0:
        return TheoreticalMoments(name, value, bias, math.nan, "invalid")
    return TheoreticalMoments(name, value, bias, 100.0 * v0 / value)


def pre_table(m: MomentSet, cap_n: int | None = None) -> list[TheoreticalMoments]:
    """PRE of t0..t4 relative to the sample mean (t4 at its optimum)."""
    v0 = var_t0(m)
    tc, m4 = mse_t4_min(m, cap_n)
    return [
        TheoreticalMoments("t0", v0, 0.0, 100.0),
        _row("t1", var_t1(m), 0.0, v0),
        _row("t2", var_t2(m), 0.0, v0),
        _row("t3", mse_t3(m), bias_t3(m), v0),
        _row("t4", m4, bias_t4(m, tc.k1, tc.k2, tc.cap_n), v0),
    ]


def theory_mse(name: str, m: MomentSet, cap_n: int | None = None) -> float:
    """First-order variance/MSE by estimator name; t4 at its optimum."""
    if name == "t0":
        return var_t0(m)
    if name == "t1":
        return var_t1(m)
    if name == "t2":
        return var_t2(m)
    if name == "t3":
        return mse_t3(m)
    if name == "t4":
        return mse_t4_min(m, cap_n)[1]
    raise ValueError(f"unknown estimator {name!r}")


def theory_bias(name: str, m: MomentSet, cap_n: int | None = None) -> float:
    if name in ("t0", "t1", "t2"):
        return 0.0
    if name == "t3":
        return bias_t3(m)
    if name == "t4":
        tc = optimal_constants(m, cap_n)
        return bias_t4(m, tc.k1, tc.k2, tc.cap_n)
    raise ValueError(f"unknown estimator {name!r}")
