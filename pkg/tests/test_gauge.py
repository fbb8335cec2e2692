import math

import numpy as np
import pytest

from gaugeopt.gauge import (
    Ball,
    GaugeOracle,
    Halfspace,
    PNormBall,
    PNormEllipsoid,
    ball_gauge,
    ball_gauge_hessian,
    converse_certificate,
    ellipsoid_gauge_constants,
    estimate_constants_by_sampling,
    gauge,
    global_structure,
    hessian_eigenvalues,
    local_structure,
    rank2_eigenvalues,
    tightness_instance,
    transform_structure,
)
from gaugeopt.sets import contains
from gaugeopt.verify import finite_diff_hessian, gauge_bisection, symmetric_eigs


def test_gauge_halfspace_closed_form():
    o = GaugeOracle(Halfspace(np.array([2.0, 0.0]), 4.0), np.zeros(2))
    assert gauge(o, np.array([1.0, 1.0])).value == pytest.approx(0.5, abs=1e-12)
    # ray never exits the halfspace
    assert gauge(o, np.array([-1.0, 1.0])).value == 0.0


def test_gauge_unit_ball_is_norm():
    o = GaugeOracle(PNormBall(2.0, np.zeros(2)), np.zeros(2))
    assert gauge(o, np.array([3.0, 4.0])).value == pytest.approx(5.0, abs=1e-12)


def test_gauge_offset_ball_vs_bisection():
    s = Ball(np.array([0.5, 0.0]), 1.0)
    o = GaugeOracle(s, np.zeros(2))
    v = gauge(o, np.array([3.0, 0.0])).value
    assert v == pytest.approx(2.0, abs=1e-10)
    assert v == pytest.approx(gauge_bisection(s, np.zeros(2), np.array([3.0, 0.0])), abs=1e-10)


def test_ball_gauge_examples():
    assert ball_gauge(np.zeros(2), 1.0, np.array([0.0, 2.0])) == pytest.approx(2.0, abs=1e-12)
    assert ball_gauge(np.array([0.5, 0.0]), 1.0, np.array([1.5, 0.0])) == pytest.approx(1.0, abs=1e-12)
    v = ball_gauge(np.array([0.5, 0.0]), 1.0, np.array([0.0, 1.0]))
    ref = gauge_bisection(Ball(np.array([0.5, 0.0]), 1.0), np.zeros(2), np.array([0.0, 1.0]))
    assert v == pytest.approx(ref, abs=1e-10)


def test_ball_gauge_hessian_pole_identity():
    H = ball_gauge_hessian(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0)
    np.testing.assert_allclose(H, np.eye(2), atol=1e-12)


def test_ball_gauge_hessian_hull_witness_matrix():
    g, R, D = 1.0, 1.0, math.sqrt(2.0)
    y_bar = np.array([math.sqrt(D ** 2 - R ** 2), -R])
    zeta = np.array([0.0, -1.0])
    H = ball_gauge_hessian(y_bar, zeta, 1.0 / g)
    ref = (1.0 / R ** 3) * np.array(
        [
            [g * R ** 2, g * R * math.sqrt(D ** 2 - R ** 2)],
            [g * R * math.sqrt(D ** 2 - R ** 2), R + g * (D ** 2 - R ** 2)],
        ]
    )
    np.testing.assert_allclose(H, ref, atol=1e-10)


def test_ball_gauge_hessian_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(2, 6)
        zeta = rng.standard_normal(n)
        zeta /= np.linalg.norm(zeta)
        y_bar = zeta * rng.uniform(0.5, 2.0) + 0.2 * rng.standard_normal(n)
        if zeta @ y_bar <= 0.1:
            continue
        r = rng.uniform(0.5, 3.0)
        c = y_bar - r * zeta
        H = ball_gauge_hessian(y_bar, zeta, r)
        Hfd = finite_diff_hessian(lambda z: 0.5 * ball_gauge(c, r, z) ** 2, y_bar)
        assert np.max(np.abs(H - Hfd)) / max(1.0, np.max(np.abs(H))) <= 1e-5


def test_hessian_eigenvalues_closed_form():
    lo, mid, hi = hessian_eigenvalues(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0)[:3]
    assert (lo, mid, hi) == (pytest.approx(1.0), pytest.approx(1.0), pytest.approx(1.0))


def test_hessian_eigenvalues_match_jacobi():
    rng = np.random.default_rng(1)
    for _ in range(30):
        zeta = rng.standard_normal(5)
        zeta /= np.linalg.norm(zeta)
        y_bar = zeta * rng.uniform(0.5, 2.0) + 0.2 * rng.standard_normal(5)
        if zeta @ y_bar <= 0.1:
            continue
        r = rng.uniform(0.5, 3.0)
        out = hessian_eigenvalues(y_bar, zeta, r)
        lo, mid, hi = out[0], out[1], out[2]
        num = symmetric_eigs(ball_gauge_hessian(y_bar, zeta, r))
        assert num[0] == pytest.approx(lo, abs=1e-10)
        assert num[-1] == pytest.approx(hi, abs=1e-10)
        for lam in num[1:-1]:
            assert lam == pytest.approx(mid, abs=1e-10)
        assert lo - 1e-12 <= 1.0 / (r * (zeta @ y_bar)) <= hi + 1e-12


def test_hessian_eigenvalues_flat_limit():
    out = hessian_eigenvalues(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1e12)
    assert out[0] == pytest.approx(0.0, abs=1e-10)


def test_rank2_eigenvalues():
    lo, hi = rank2_eigenvalues(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 2.0, 0.0, 3.0)
    assert (lo, hi) == (pytest.approx(2.0), pytest.approx(3.0))
    lo, hi = rank2_eigenvalues(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0, 1.0, 0.0)
    assert {round(lo, 10), round(hi, 10)} == {0.0, 3.0}
    rng = np.random.default_rng(2)
    for _ in range(30):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        c1, c2, c3 = rng.standard_normal(3)
        lo, hi = rank2_eigenvalues(a, b, c1, c2, c3)
        M = c1 * np.outer(a, a) + c2 * (np.outer(a, b) + np.outer(b, a)) + c3 * np.outer(b, b)
        num = symmetric_eigs(M)
        nz = [v for v in num if abs(v) > 1e-9]
        for v in sorted(nz):
            assert min(abs(v - lo), abs(v - hi)) <= 1e-10


def test_local_structure_unit_ball():
    o = GaugeOracle(PNormBall(2.0, np.zeros(3)), np.zeros(3))
    ev = gauge(o, np.array([0.0, 1.0, 0.0]))
    ls = local_structure(ev, np.zeros(3), 1.0, 1.0)
    assert ls.mu_local == pytest.approx(1.0, abs=1e-12)
    assert ls.L_local == pytest.approx(1.0, abs=1e-12)


def test_local_structure_alpha_zero():
    o = GaugeOracle(PNormBall(2.0, np.zeros(2)), np.zeros(2))
    ev = gauge(o, np.array([2.0, 0.0]))
    ls = local_structure(ev, np.zeros(2), 0.0, 1.0)
    assert ls.mu_local == 0.0


def test_local_structure_translated_ball_extremes():
    # unit ball shifted by b: extremes of the local constants over the boundary
    b = np.array([0.4, 0.0])
    nb = float(np.linalg.norm(b))
    s = Ball(b, 1.0)
    o = GaugeOracle(s, np.zeros(2))
    mu_bounds, L_bounds = [], []
    for t in np.linspace(0.0, 2.0 * math.pi, 721):
        u = np.array([math.cos(t), math.sin(t)])
        ev = gauge(o, b + u)
        ls = local_structure(ev, np.zeros(2), 1.0, 1.0)
        assert ls.mu_lower_bound <= ls.mu_local + 1e-12
        assert ls.L_local <= ls.L_upper_bound + 1e-12
        mu_bounds.append(ls.mu_lower_bound)
        L_bounds.append(ls.L_upper_bound)
    # worst-case simplified bounds over the boundary hit the closed forms
    assert min(mu_bounds) == pytest.approx(1.0 / ((1 + nb) * (2 + nb)), rel=1e-4)
    assert max(L_bounds) == pytest.approx((2 - nb) / (1 - nb) ** 2, rel=1e-4)


def test_local_structure_bound_ordering():
    rng = np.random.default_rng(3)
    o = GaugeOracle(Ball(np.array([0.3, -0.2, 0.1]), 1.5), np.zeros(3))
    for _ in range(50):
        y = rng.standard_normal(3) * 2.0
        ev = gauge(o, y)
        if ev.value <= 1e-9:
            continue
        ls = local_structure(ev, np.zeros(3), 2.0 / 3.0, 2.0 / 3.0)
        assert ls.mu_lower_bound <= ls.mu_local + 1e-12
        assert ls.mu_local <= ls.L_local + 1e-12
        assert ls.L_local <= ls.L_upper_bound + 1e-12


def test_global_structure_corollary_values():
    o = GaugeOracle(PNormBall(2.0, np.zeros(2)), np.zeros(2))
    mu, L = global_structure(o)
    assert mu == pytest.approx(0.5, abs=1e-12)
    assert L == pytest.approx(2.0, abs=1e-12)
    a, b = np.array([3.0, 0.0]), 4.0
    oh = GaugeOracle(Halfspace(a, b), np.zeros(2))
    mu, L = global_structure(oh)
    assert mu == 0.0
    assert L == pytest.approx(np.dot(a, a) / b ** 2, rel=1e-12)


def test_transform_structure():
    assert transform_structure(1.0, 1.0, 2.0 * np.eye(2)) == (pytest.approx(4.0), pytest.approx(4.0))
    mu, L = transform_structure(1.0, 1.0, np.diag([1.0, 3.0]))
    assert (mu, L) == (pytest.approx(1.0), pytest.approx(9.0))
    mu, L = transform_structure(1.0, 1.0, np.diag([1.0, 0.0]))
    assert mu == 0.0


def test_converse_certificate_self_certifying():
    o = GaugeOracle(PNormBall(2.0, np.zeros(2)), np.zeros(2))
    ev = gauge(o, np.array([1.0, 0.0]))
    outer, inner = converse_certificate(ev, 1.0, 1.0)
    np.testing.assert_allclose(outer.c, np.zeros(2), atol=1e-10)
    assert outer.r == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(inner.c, np.zeros(2), atol=1e-10)
    assert inner.r == pytest.approx(1.0, abs=1e-10)


def test_converse_certificate_absent_when_degenerate():
    o = GaugeOracle(PNormBall(2.0, np.zeros(2)), np.zeros(2))
    ev = gauge(o, np.array([1.0, 0.0]))
    outer, inner = converse_certificate(ev, 0.0, math.inf)
    assert outer is None and inner is None


def test_tightness_instance_examples():
    s, y_bar, zeta = tightness_instance(1.0, 1.0, 1.0)
    np.testing.assert_allclose(y_bar, [0.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(zeta, [0.0, -1.0], atol=1e-12)
    out = hessian_eigenvalues(y_bar, zeta, 1.0)
    assert out[0] == pytest.approx(1.0, abs=1e-10)
    assert out[2] == pytest.approx(1.0, abs=1e-10)

    s, y_bar, zeta = tightness_instance(1.0, 1.0, math.sqrt(2.0))
    out = hessian_eigenvalues(y_bar, zeta, 1.0)
    assert out[0] == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-10)
    assert out[2] == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0, abs=1e-10)


def test_estimate_constants_unit_ball_exact():
    o = GaugeOracle(PNormBall(2.0, np.zeros(3)), np.zeros(3))
    mu, L = estimate_constants_by_sampling(o, 200, np.random.default_rng(0))
    assert mu == pytest.approx(1.0, abs=1e-6)
    assert L == pytest.approx(1.0, abs=1e-6)


def test_estimate_constants_p15_ball_positive():
    o = GaugeOracle(PNormBall(1.5, np.zeros(2)), np.zeros(2))
    mu, _ = estimate_constants_by_sampling(o, 2000, np.random.default_rng(0))
    assert mu > 0.0


def test_positive_homogeneity():
    rng = np.random.default_rng(4)
    o = GaugeOracle(PNormEllipsoid(np.array([[1.0, 0.3], [0.0, 2.0]]), np.array([0.1, 0.0]), 3.0, 1.0), np.zeros(2))
    for _ in range(20):
        y = rng.standard_normal(2)
        base = gauge(o, y).value
        for t in (0.5, 2.0, 10.0):
            assert gauge(o, t * y).value == pytest.approx(t * base, abs=1e-10 * max(1.0, t * base))


def test_membership_equivalence():
    rng = np.random.default_rng(5)
    s = Ball(np.array([0.2, -0.1]), 1.3)
    o = GaugeOracle(s, np.zeros(2))
    for _ in range(200):
        y = rng.standard_normal(2) * 2.0
        assert contains(s, y) == (gauge(o, y).value <= 1.0 + 1e-10)


def test_sandwich_bounds():
    rng = np.random.default_rng(6)
    o = GaugeOracle(Ball(np.array([0.5, 0.0]), 1.0), np.zeros(2))
    for _ in range(200):
        y = rng.standard_normal(2) * 3.0
        g = gauge(o, y).value
        ny = np.linalg.norm(y)
        assert ny / o.D <= g + 1e-10
        assert g <= ny / o.R + 1e-10


def test_half_square_subgradient_inequality():
    rng = np.random.default_rng(7)
    o = GaugeOracle(PNormBall(4.0, np.zeros(3)), np.zeros(3))
    for _ in range(1000):
        y = rng.standard_normal(3)
        z = rng.standard_normal(3)
        ev = gauge(o, y)
        if ev.value <= 1e-9:
            continue
        lhs = 0.5 * gauge(o, z).value ** 2
        rhs = 0.5 * ev.value ** 2 + ev.half_sq_subgrad @ (z - y)
        assert lhs >= rhs - 1e-10


def test_gauge_closed_forms_vs_bisection():
    rng = np.random.default_rng(8)
    variants = [
        Halfspace(np.array([1.0, 0.5]), 2.0),
        Ball(np.array([0.3, -0.2]), 1.2),
        PNormEllipsoid(np.array([[1.5, 0.2], [0.0, 0.8]]), np.array([0.1, 0.1]), 2.0, 1.0),
        PNormBall(4.0, np.zeros(2)),
        PNormBall(3.0, np.zeros(2)),
    ]
    for s in variants:
        o = GaugeOracle(s, np.zeros(2))
        for _ in range(100):
            y = rng.standard_normal(2) * 2.0
            v = gauge(o, y).value
            ref = gauge_bisection(s, np.zeros(2), y)
            if ref == 0.0:
                assert v == 0.0
            else:
                assert abs(v - ref) / max(1.0, ref) <= 1e-10


def test_ellipsoid_gauge_constants_translated_ball():
    b = np.array([0.3, 0.0])
    nb = float(np.linalg.norm(b))
    mu, L = ellipsoid_gauge_constants(PNormEllipsoid(np.eye(2), b, 2.0, 1.0))
    assert mu == pytest.approx(1.0 / ((1 + nb) * (2 + nb)), rel=1e-12)
    assert L == pytest.approx((2 - nb) / (1 - nb) ** 2, rel=1e-12)
