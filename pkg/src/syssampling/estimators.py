"""Point estimators of the population mean from a single systematic sample.

``t0`` is the plain sample mean, ``t1`` the ratio estimator, ``t2`` the
product estimator, ``t3`` the exponential ratio-type estimator and ``t4`` the
difference-exponential family built on the shifted auxiliary
``a = x + cap_n * mean_x``.  :func:`optimal_constants` gives the ``(k1, k2)``
that minimise the first-order MSE of ``t4``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .design import SystematicSample
from .errors import NumericalError, SingularSystemError
from .population import MomentSet

log = logging.getLogger(__name__)

ESTIMATORS = ("t0", "t1", "t2", "t3", "t4")

# relative tolerance for declaring the normal equations singular
SINGULAR_RTOL = 1e-12
# agreement required between the solved constants and the closed forms
CLOSED_FORM_RTOL = 1e-8


def est_mean(s: SystematicSample) -> float:
    return s.mean_y_star


def est_ratio_t1(s: SystematicSample, mean_x: float) -> float:
    xs = s.mean_x_star
    if xs == 0:
        raise NumericalError(f"start {s.start}: sample mean of x is zero")
    if xs * mean_x < 0:
        warnings.warn(
            f"start {s.start}: sample and population means of x differ in sign",
            RuntimeWarning,
            stacklevel=2,
        )
    return s.mean_y_star / xs * mean_x


def est_product_t2(s: SystematicSample, mean_x: float) -> float:
    if mean_x == 0:
        raise NumericalError("population mean of x is zero")
    return s.mean_y_star * s.mean_x_star / mean_x


def est_exp_ratio_t3(s: SystematicSample, mean_x: float) -> float:
    xs = s.mean_x_star
    denom = mean_x + xs
    if denom == 0:
        raise NumericalError(f"start {s.start}: mean_x + sample mean of x is zero")
    return s.mean_y_star * math.exp((mean_x - xs) / denom)


def est_transformed_t4(
    s: SystematicSample, mean_x: float, cap_n: int, k1: float, k2: float
) -> float:
    """``[k1*ybar + k2*(Xbar - xbar)] * exp((A - a)/(A + a))``.

    With ``a = xbar + cap_n*Xbar`` and ``A = (1 + cap_n)*Xbar`` the exponent
    is ``(Xbar - xbar) / (2*(1 + cap_n)*Xbar + (xbar - Xbar))``; that form is
    used directly to avoid cancellation when ``cap_n`` is large.
    """
    xs = s.mean_x_star
    diff = xs - mean_x
    denom = 2.0 * (1 + cap_n) * mean_x + diff
    if denom == 0:
        raise NumericalError(f"start {s.start}: transformed denominator is zero")
    return (k1 * s.mean_y_star - k2 * diff) * math.exp(-diff / denom)


def estimate(
    name: str,
    s: SystematicSample,
    mean_x: float,
    *,
    cap_n: int | None = None,
    k1: float | None = None,
    k2: float | None = None,
) -> float:
    """Dispatch by estimator name (``"t0"`` .. ``"t4"``)."""
    if name == "t0":
        return est_mean(s)
    if name == "t1":
        return est_ratio_t1(s, mean_x)
    if name == "t2":
        return est_product_t2(s, mean_x)
    if name == "t3":
        return est_exp_ratio_t3(s, mean_x)
    if name == "t4":
        if cap_n is None or k1 is None or k2 is None:
            raise ValueError("t4 needs cap_n, k1 and k2")
        return est_transformed_t4(s, mean_x, cap_n, k1, k2)
    raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")


@dataclass(frozen=True)
class TransformConstants:
    """Quadratic-form constants of the ``t4`` MSE and its minimiser.

    ``a1``..``a5`` follow the usual published layout: the ``k1**2``, ``k1``
    (bias), ``k2**2``, ``k2`` and ``k1*k2`` coefficients, up to the factors
    ``mean_y**2`` and 2.  ``k1_closed``/``k2_closed`` are the textbook closed
    forms, kept as a cross-check of the linear solve.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    k1: float
    k2: float
    cap_n: int
    det: float
    k1_closed: float
    k2_closed: float

    @property
    def closed_form_agrees(self) -> bool:
        return math.isclose(
            self.k1, self.k1_closed, rel_tol=CLOSED_FORM_RTOL, abs_tol=1e-12
        ) and math.isclose(
            self.k2, self.k2_closed, rel_tol=CLOSED_FORM_RTOL, abs_tol=1e-12 * (1 + abs(self.k2))
        )


def a_constants(m: MomentSet, cap_n: int) -> tuple[float, float, float, float, float]:
    """``A1``..``A5`` for the shift constant ``cap_n``."""
    if cap_n < 0:
        raise ValueError(f"cap_n must be non-negative, got {cap_n}")
    th, c0, c1, c01 = m.theta, m.c0sq, m.c1sq, m.c0c1
    ybar, xbar = m.mean_y, m.mean_x
    q = 1.0 + cap_n
    a1 = th * (c0 + c1 / q**2 - 2 * c01 / q)
    a2 = th * (3 * c1 / (8 * q**2) - c01 / (2 * q))
    a3 = xbar**2 * th * c1
    a4 = ybar * xbar * th * c1 / q
    a5 = ybar * xbar * th * (c1 / q - c01)
    return a1, a2, a3, a4, a5


def t4_quadratic(m: MomentSet, cap_n: int) -> np.ndarray:
    """Symmetric 3x3 matrix ``Q`` with ``MSE(t4) = z @ Q @ z``, ``z = (k1, k2, 1)``.

    Built from the second-order expansion in the relative errors
    ``e0 = ybar*/Ybar - 1`` and ``e1 = xbar*/Xbar - 1`` with ``g = 1/(2(1+cap_n))``:

        t4 - Ybar = c + a0*e0 + a1*e1 + b01*e0*e1 + b11*e1**2

        c   = Ybar*(k1 - 1)
        a0  = k1*Ybar
        a1  = -k1*Ybar*g - k2*Xbar
        b01 = -k1*Ybar*g
        b11 = 1.5*k1*Ybar*g**2 + k2*Xbar*g

    Squaring and keeping moments up to order two gives
    ``c**2 + 2c*(b01*E01 + b11*E11) + a0**2*E00 + 2*a0*a1*E01 + a1**2*E11``.
    Each coefficient is affine in ``z``, so the MSE is a quadratic form.
    """
    if cap_n < 0:
        raise ValueError(f"cap_n must be non-negative, got {cap_n}")
    Y, X = m.mean_y, m.mean_x
    g = 0.5 / (1.0 + cap_n)
    c = np.array([Y, 0.0, -Y])
    a0 = np.array([Y, 0.0, 0.0])
    a1 = np.array([-Y * g, -X, 0.0])
    b01 = np.array([-Y * g, 0.0, 0.0])
    b11 = np.array([1.5 * Y * g * g, X * g, 0.0])
    drift = b01 * m.e01 + b11 * m.e11
    Q = (
        np.outer(c, c)
        + np.outer(c, drift)
        + np.outer(drift, c)
        + m.e00 * np.outer(a0, a0)
        + m.e01 * (np.outer(a0, a1) + np.outer(a1, a0))
        + m.e11 * np.outer(a1, a1)
    )
    return Q


def t4_bias_vector(m: MomentSet, cap_n: int) -> np.ndarray:
    """Vector ``b`` with first-order ``bias(t4) = b @ (k1, k2, 1)``."""
    Y, X = m.mean_y, m.mean_x
    g = 0.5 / (1.0 + cap_n)
    return np.array(
        [
            Y + Y * (1.5 * g * g * m.e11 - g * m.e01),
            X * g * m.e11,
            -Y,
        ]
    )


def optimal_constants(m: MomentSet, cap_n: int | None = None) -> TransformConstants:
    """Minimise the first-order MSE of ``t4`` over ``(k1, k2)``.

    The normal equations of :func:`t4_quadratic` are solved directly; the
    closed-form fractions in ``A1``..``A5`` are evaluated alongside and a
    disagreement is logged.
    """
    if cap_n is None:
        cap_n = m.N
    if m.c1sq <= 0 or m.mean_x == 0:
        raise SingularSystemError("degenerate auxiliary variate: C1^2 = 0")
    a1, a2, a3, a4, a5 = a_constants(m, cap_n)
    Y2 = m.mean_y**2
    D = 2 * a5**2 - 2 * a3 * Y2 * (1 + a1)
    scale = max(1.0, abs(2 * a5**2), abs(2 * a3 * Y2 * (1 + a1)))
    if abs(D) <= SINGULAR_RTOL * scale:
        raise SingularSystemError(f"normal equations singular (D={D:.3e})")

    Q = t4_quadratic(m, cap_n)
    H, rhs = Q[:2, :2], -Q[:2, 2]
    det = float(H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0])
    k1, k2 = np.linalg.solve(H, rhs)

    k1_closed = (a4 * a5 - 2 * Y2 * (1 + a2) * a3) / D
    k2_closed = Y2 * (2 * a5 * (1 + a2) - a4 * (1 + a1)) / D
    tc = TransformConstants(
        a1=a1,
        a2=a2,
        a3=a3,
        a4=a4,
        a5=a5,
        k1=float(k1),
        k2=float(k2),
        cap_n=cap_n,
        det=det,
        k1_closed=k1_closed,
        k2_closed=k2_closed,
    )
    if not tc.closed_form_agrees:
        log.warning(
            "closed-form constants (%.12g, %.12g) disagree with solved (%.12g, %.12g)",
            k1_closed, k2_closed, tc.k1, tc.k2,
        )
    return tc
