import math

import numpy as np
import pytest
import sympy as sp

from syssampling import (
    Population,
    SingularSystemError,
    SummaryStats,
    draw_sample,
    est_exp_ratio_t3,
    est_mean,
    est_product_t2,
    est_ratio_t1,
    est_transformed_t4,
    moments_from_summary,
    optimal_constants,
)
from syssampling.design import SystematicSample
from syssampling.estimators import NumericalError, a_constants, t4_quadratic
from syssampling.theory import bias_t4, mse_t4


def sample(y, x, start=1, k=1):
    return SystematicSample(start=start, interval_k=k, y=np.asarray(y, float), x=np.asarray(x, float))


def random_moments(rng):
    n = int(rng.integers(2, 20))
    N = n * int(rng.integers(2, 30))
    r = float(rng.uniform(-0.9 / (n - 1), 0.9))
    return moments_from_summary(
        SummaryStats(
            N=N, n=n,
            mean_y=float(rng.uniform(1, 500)), mean_x=float(rng.uniform(1, 50)),
            s2_y=float(rng.uniform(0.1, 5000)), s2_x=float(rng.uniform(0.1, 20)),
            rho=float(rng.uniform(-0.95, 0.95)), rho_wy=r, rho_wx=r,
        )
    )


# --- sample mean -------------------------------------------------------------

def test_est_mean_examples(pop4):
    assert est_mean(sample([2, 4], [1, 1])) == 3
    assert est_mean(sample([7.5] * 3, [1, 2, 3])) == 7.5
    assert est_mean(draw_sample(pop4, 4, 1)) == pop4.mean_y


# --- ratio -------------------------------------------------------------------

def test_t1_examples(pop4):
    assert est_ratio_t1(sample([3, 3], [2, 2]), 2.0) == 3.0
    assert est_ratio_t1(draw_sample(pop4, 2, 1), pop4.mean_x) == 2.5


def test_t1_proportional_variates_exact():
    x = np.array([1.5, 2.0, 7.0, 3.25, 4.0, 9.5])
    pop = Population(2 * x, x)
    for start in (1, 2, 3):
        assert est_ratio_t1(draw_sample(pop, 2, start), pop.mean_x) == pop.mean_y


def test_t1_zero_sample_mean():
    with pytest.raises(NumericalError):
        est_ratio_t1(sample([1, 2], [-1, 1]), 1.0)


def test_t1_sign_warning():
    with pytest.warns(RuntimeWarning):
        est_ratio_t1(sample([1, 2], [-1, -2]), 1.0)


# --- product -----------------------------------------------------------------

def test_t2_examples(pop4):
    assert est_product_t2(sample([5, 7], [2, 2]), 2.0) == 6.0
    assert est_product_t2(draw_sample(pop4, 2, 1), 2.5) == pytest.approx(1.6, rel=1e-15)
    assert est_product_t2(draw_sample(pop4, 2, 2), 2.5) == pytest.approx(3.6, rel=1e-15)


def test_t2_zero_population_mean():
    with pytest.raises(NumericalError):
        est_product_t2(sample([1, 2], [1, 2]), 0.0)


# --- exponential ratio ------------------------------------------------------

def test_t3_examples(pop4):
    assert est_exp_ratio_t3(sample([5, 7], [2, 2]), 2.0) == 6.0
    assert est_exp_ratio_t3(draw_sample(pop4, 2, 1), 2.5) == pytest.approx(2 * math.exp(0.5 / 4.5), rel=1e-15)
    assert est_exp_ratio_t3(draw_sample(pop4, 2, 1), 2.5) == pytest.approx(2.2350381, abs=1e-7)
    assert est_exp_ratio_t3(draw_sample(pop4, 2, 2), 2.5) == pytest.approx(2.7393021, abs=1e-7)


def test_t3_zero_denominator():
    with pytest.raises(NumericalError):
        est_exp_ratio_t3(sample([1, 2], [-1, -1]), 1.0)


# --- transformed estimator ---------------------------------------------------

def test_t4_zero_constants(pop4):
    assert est_transformed_t4(draw_sample(pop4, 2, 1), 2.5, 4, 0.0, 0.0) == 0.0


def test_t4_at_population_mean_of_x():
    s = sample([4, 6], [3, 5])
    assert est_transformed_t4(s, 4.0, 10, 1.0, 123.4) == 5.0


def test_t4_large_shift_tends_to_sample_mean(pop4):
    s = draw_sample(pop4, 2, 1)
    assert est_transformed_t4(s, 2.5, 10**6, 1.0, 0.0) == pytest.approx(s.mean_y_star, rel=1e-5)


def test_t4_matches_literal_definition(pop4):
    s = draw_sample(pop4, 2, 2)
    X, N = 2.5, 4
    a_bar, A_bar = s.mean_x_star + N * X, X + N * X
    literal = (0.9 * s.mean_y_star + 0.3 * (X - s.mean_x_star)) * math.exp((A_bar - a_bar) / (A_bar + a_bar))
    assert est_transformed_t4(s, X, N, 0.9, 0.3) == pytest.approx(literal, rel=1e-14)


def test_t4_zero_denominator():
    with pytest.raises(NumericalError):
        est_transformed_t4(sample([1, 1], [-1, -1]), 1.0, 0, 1.0, 0.0)


# --- invariances --------------------------------------------------------------

@pytest.mark.parametrize("c", [0.5, 3.0, 1e3])
def test_y_scale_equivariance(c):
    rng = np.random.default_rng(2)
    y, x = rng.uniform(1, 5, 6), rng.uniform(1, 5, 6)
    s, sc = sample(y, x), sample(c * y, x)
    X = 2.7
    for f in (est_ratio_t1, est_product_t2, est_exp_ratio_t3):
        assert f(sc, X) == pytest.approx(c * f(s, X), rel=1e-14)
    assert est_mean(sc) == pytest.approx(c * est_mean(s), rel=1e-14)


@pytest.mark.parametrize("c", [0.25, 4.0, 1e3])
def test_x_scale_invariance(c):
    rng = np.random.default_rng(3)
    y, x = rng.uniform(1, 5, 6), rng.uniform(1, 5, 6)
    s, sc = sample(y, x), sample(y, c * x)
    X = 2.7
    for f in (est_ratio_t1, est_product_t2, est_exp_ratio_t3):
        assert f(sc, c * X) == pytest.approx(f(s, X), rel=1e-14)


def test_optimal_t4_scale_equivariance_via_recomputation():
    base = dict(N=60, n=6, mean_x=5.0, s2_x=1.0, rho=0.7, rho_wy=0.1, rho_wx=0.1)
    m1 = moments_from_summary(SummaryStats(mean_y=10.0, s2_y=4.0, **base))
    m2 = moments_from_summary(SummaryStats(mean_y=30.0, s2_y=36.0, **base))
    t1, t2 = optimal_constants(m1), optimal_constants(m2)
    assert t2.k1 == pytest.approx(t1.k1, rel=1e-12)
    assert t2.k2 == pytest.approx(3 * t1.k2, rel=1e-12)
    s1, s2 = sample([9, 12], [4.5, 5.5]), sample([27, 36], [4.5, 5.5])
    v1 = est_transformed_t4(s1, 5.0, 60, t1.k1, t1.k2)
    v2 = est_transformed_t4(s2, 5.0, 60, t2.k1, t2.k2)
    assert v2 == pytest.approx(3 * v1, rel=1e-12)


@pytest.mark.parametrize("xs", [1.0, 2.0, 2.9, 3.1, 4.0, 8.0])
def test_t3_direction_follows_auxiliary(xs):
    s = sample([5.0, 5.0], [xs, xs])
    X = 3.0
    assert np.sign(est_exp_ratio_t3(s, X) - s.mean_y_star) == np.sign(X - xs)


# --- optimal constants --------------------------------------------------------

def test_optimal_constants_degenerate_auxiliary():
    m = moments_from_summary(
        SummaryStats(N=20, n=4, mean_y=10, mean_x=5, s2_y=4, s2_x=0.0, rho=0.0, rho_wy=0.1, rho_wx=0.1)
    )
    with pytest.raises(SingularSystemError, match="degenerate auxiliary variate"):
        optimal_constants(m)


def test_closed_forms_agree_with_linear_solve(forest):
    tc = optimal_constants(forest)
    assert tc.closed_form_agrees
    assert tc.k1 == pytest.approx(tc.k1_closed, rel=1e-10)
    assert tc.k2 == pytest.approx(tc.k2_closed, rel=1e-10)


def test_closed_forms_agree_on_random_moments():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = random_moments(rng)
        for cap_n in (0, 1, m.N):
            tc = optimal_constants(m, cap_n)
            assert tc.k1 == pytest.approx(tc.k1_closed, rel=1e-8)
            assert tc.k2 == pytest.approx(tc.k2_closed, rel=1e-8, abs=1e-9)


def test_optimum_beats_neighbourhood_grid(forest):
    tc = optimal_constants(forest)
    best = mse_t4(forest, tc.k1, tc.k2)
    for k1 in np.linspace(tc.k1 - 0.5, tc.k1 + 0.5, 201):
        for k2 in np.linspace(tc.k2 - 0.5 * abs(tc.k2) - 0.5, tc.k2 + 0.5 * abs(tc.k2) + 0.5, 201)[::10]:
            assert mse_t4(forest, k1, k2) >= best - 1e-12 * forest.mean_y**2


def test_optimum_gradient_vanishes(forest):
    # central finite differences of the MSE at the optimum
    tc = optimal_constants(forest)
    h1, h2 = 1e-4, 1e-4 * max(1.0, abs(tc.k2))
    g1 = (mse_t4(forest, tc.k1 + h1, tc.k2) - mse_t4(forest, tc.k1 - h1, tc.k2)) / (2 * h1)
    g2 = (mse_t4(forest, tc.k1, tc.k2 + h2) - mse_t4(forest, tc.k1, tc.k2 - h2)) / (2 * h2)
    scale = forest.mean_y**2
    assert abs(g1) < 1e-6 * scale
    assert abs(g2) < 1e-6 * scale


def test_vanishing_sampling_fraction_limit():
    m = moments_from_summary(
        SummaryStats(N=176, n=16, mean_y=282.6136, mean_x=6.9943, s2_y=24114.67, s2_x=8.76,
                     rho=0.871, rho_wy=0.5, rho_wx=0.5)
    )
    tiny = type(m)(**{**m.__dict__, "theta": 1e-12})
    tc = optimal_constants(tiny)
    assert tc.k1 == pytest.approx(1.0, abs=1e-8)
    assert mse_t4(tiny, tc.k1, tc.k2) <= mse_t4(tiny, 1.0, 0.0)
    assert mse_t4(tiny, tc.k1, tc.k2) == pytest.approx(0.0, abs=1e-6 * m.mean_y**2)


def test_a_constants_layout(forest):
    a1, a2, a3, a4, a5 = a_constants(forest, forest.N)
    q = 1 + forest.N
    th = forest.theta
    assert a3 == pytest.approx(forest.mean_x**2 * th * forest.c1sq)
    assert a4 == pytest.approx(forest.mean_y * forest.mean_x * th * forest.c1sq / q)
    assert a1 == pytest.approx(th * (forest.c0sq + forest.c1sq / q**2 - 2 * forest.c0c1 / q))
    assert a2 == pytest.approx(th * (3 * forest.c1sq / (8 * q**2) - forest.c0c1 / (2 * q)))
    assert a5 == pytest.approx(forest.mean_y * forest.mean_x * th * (forest.c1sq / q - forest.c0c1))


def test_quadratic_matches_symbolic_expansion():
    """Independent oracle: sympy series of t4 to second order in the e-terms."""
    k1, k2, Y, X, g, e0, e1, t = sp.symbols("k1 k2 Y X g e0 e1 t")
    E00, E01, E11 = sp.symbols("E00 E01 E11")
    t4 = (k1 * Y * (1 + t * e0) - k2 * X * t * e1) * sp.exp(-g * t * e1 / (1 + g * t * e1))
    err = sp.series(t4 - Y, t, 0, 3).removeO()
    sq = sp.expand(sp.series(sp.expand(err**2), t, 0, 3).removeO())
    bias = sp.expand(err)

    def expect(expr):
        expr = sp.expand(expr).subs(t, 1)
        poly = sp.Poly(expr, e0, e1)
        out = 0
        table = {(0, 0): 1, (1, 0): 0, (0, 1): 0, (2, 0): E00, (1, 1): E01, (0, 2): E11}
        for (p0, p1), coeff in poly.terms():
            out += coeff * table[(p0, p1)]
        return sp.expand(out)

    mse_sym, bias_sym = expect(sq), expect(bias)
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = random_moments(rng)
        cap_n = int(rng.integers(0, 50))
        Q = t4_quadratic(m, cap_n)
        vals = {Y: m.mean_y, X: m.mean_x, g: 0.5 / (1 + cap_n), E00: m.e00, E01: m.e01, E11: m.e11}
        for kk1, kk2 in [(1.0, 0.0), (0.7, 3.0), (-0.2, -1.5)]:
            z = np.array([kk1, kk2, 1.0])
            sym = float(mse_sym.subs({**vals, k1: kk1, k2: kk2}))
            assert z @ Q @ z == pytest.approx(sym, rel=1e-10)
            symb = float(bias_sym.subs({**vals, k1: kk1, k2: kk2}))
            assert bias_t4(m, kk1, kk2, cap_n) == pytest.approx(symb, rel=1e-10, abs=1e-12 * m.mean_y)
