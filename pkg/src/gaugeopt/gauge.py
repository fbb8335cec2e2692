"""Gauge evaluation and the squared-gauge structure engine.

Evaluates Minkowski gauges with closed forms where available (halfspaces,
balls, 2-norm ellipsoids, quartic 4-norm ellipsoids) and safeguarded
scalar root finding otherwise, and computes the local/global strong
convexity and smoothness constants of half the squared gauge, including
ball-gauge Hessians, their eigenvalue closed forms, tightness witnesses,
and converse ball certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sets import (
    Ball,
    Halfspace,
    HullBallOrigin,
    PNormBall,
    PNormEllipsoid,
    StructuredSet,
    pointwise_constants,
    radius_bounds,
)

__all__ = [
    "GaugeEval",
    "GaugeOracle",
    "LocalStructure",
    "gauge",
    "ball_gauge",
    "ball_gauge_hessian",
    "hessian_eigenvalues",
    "rank2_eigenvalues",
    "local_structure",
    "global_structure",
    "transform_structure",
    "offset_unit_ball_constants",
    "ellipsoid_gauge_constants",
    "converse_certificate",
    "tightness_instance",
    "estimate_constants_by_sampling",
]


@dataclass
class GaugeEval:
    """One gauge evaluation: value, boundary point, normal, subgradient.

    ``half_sq_subgrad`` is an element of the subdifferential of half the
    squared gauge at the query point; ``boundary_point`` and
    ``unit_normal`` are absent (None) when the value is 0.
    """

    value: float
    boundary_point: np.ndarray | None
    unit_normal: np.ndarray | None
    half_sq_subgrad: np.ndarray


@dataclass
class LocalStructure:
    """Local constants of half the squared gauge at one boundary point."""

    mu_local: float
    L_local: float
    mu_lower_bound: float
    L_upper_bound: float


class GaugeOracle:
    """A structured set with an interior center; evaluates its gauge."""

    def __init__(self, s: StructuredSet, e):
        self.set = s
        self.e = np.asarray(e, dtype=float)
        if self.e.shape[0] != s.dim:
            raise ValueError("center dimension mismatch")
        if not s.contains(self.e):
            raise ValueError("center e must be a member of the set")
        self.R, self.D = radius_bounds(s, self.e)
        if not self.R > 0:
            raise ValueError("center e must be strictly interior")
        self.lipschitz_M = 1.0 / self.R
        self.e.flags.writeable = False

    def gauge(self, y) -> GaugeEval:
        return gauge(self, y)

    def __call__(self, y) -> float:
        return gauge(self, y).value


def _zero_eval(n: int) -> GaugeEval:
    return GaugeEval(0.0, None, None, np.zeros(n))


def _finish_eval(oracle: GaugeOracle, y: np.ndarray, value: float) -> GaugeEval:
    if value <= 0.0:
        return _zero_eval(y.size)
    bp = oracle.e + (y - oracle.e) / value
    zeta = oracle.set.normal_vector(bp)
    s = float(zeta @ (bp - oracle.e))
    g = (value / s) * zeta
    return GaugeEval(value, bp, zeta, g)


def _gauge_value_pnorm(w: np.ndarray, u: np.ndarray, tau: float, p: float) -> float:
    """Root of h(lam) = ||w lam + u||_p - tau lam, h convex and decreasing.

    ``w`` is the recentered image of the center (strictly inside the ball),
    ``u`` the image of the query direction.  Returns 0 when u = 0.
    """
    norm_u = float(np.sum(np.abs(u) ** p) ** (1.0 / p))
    if norm_u == 0.0:
        return 0.0

    def h(lam: float) -> float:
        return float(np.sum(np.abs(w * lam + u) ** p) ** (1.0 / p)) - tau * lam

    # h(0) = ||u||_p > 0 and the asymptotic slope ||w||_p - tau is negative,
    # so a unique root exists; bracket it by doubling.
    norm_w = float(np.sum(np.abs(w) ** p) ** (1.0 / p))
    hi = norm_u / max(tau - norm_w, 1e-300)
    lo = 0.0
    while h(hi) > 0.0:
        lo = hi
        hi *= 2.0
    lam = hi
    for _ in range(200):
        val = h(lam)
        if val > 0.0:
            lo = max(lo, lam)
        else:
            hi = min(hi, lam)
        # Newton step using the exact derivative of the p-norm term.
        z = w * lam + u
        az = np.abs(z)
        npow = float(np.sum(az**p))
        if npow == 0.0:
            deriv = -tau
        else:
            nval = npow ** (1.0 / p)
            deriv = float((np.sign(z) * az ** (p - 1.0)) @ w) / npow * nval - tau
        lam_new = lam - val / deriv if deriv != 0.0 else 0.5 * (lo + hi)
        if not (lo < lam_new < hi):
            lam_new = 0.5 * (lo + hi)
        if abs(lam_new - lam) <= 1e-12 * max(1.0, lam):
            return lam_new
        lam = lam_new
    return lam


def _gauge_value_quartic(w: np.ndarray, u: np.ndarray, tau: float) -> float:
    """Positive root of sum (w_i lam + u_i)^4 = (tau lam)^4 via safeguarded Newton."""
    if not np.any(u):
        return 0.0
    # Expand the homogeneous quartic q(lam) = sum (w lam + u)^4 - tau^4 lam^4.
    c4 = float(np.sum(w**4)) - tau**4
    c3 = 4.0 * float(np.sum(w**3 * u))
    c2 = 6.0 * float(np.sum(w**2 * u**2))
    c1 = 4.0 * float(np.sum(w * u**3))
    c0 = float(np.sum(u**4))
    coeffs = (c4, c3, c2, c1, c0)

    def q(lam):
        return (((c4 * lam + c3) * lam + c2) * lam + c1) * lam + c0

    def dq(lam):
        return ((4.0 * c4 * lam + 3.0 * c3) * lam + 2.0 * c2) * lam + c1

    norm_u = float(np.sum(u**4) ** 0.25)
    norm_w = float(np.sum(w**4) ** 0.25)
    hi = norm_u / max(tau - norm_w, 1e-300)
    lo = 0.0
    while q(hi) > 0.0:
        lo = hi
        hi *= 2.0
    lam = hi
    for _ in range(200):
        val = q(lam)
        if val > 0.0:
            lo = max(lo, lam)
        else:
            hi = min(hi, lam)
        deriv = dq(lam)
        lam_new = lam - val / deriv if deriv != 0.0 else 0.5 * (lo + hi)
        if not (lo < lam_new < hi):
            lam_new = 0.5 * (lo + hi)
        if abs(lam_new - lam) <= 1e-13 * max(1.0, lam):
            return lam_new
        lam = lam_new
    del coeffs
    return lam


def _gauge_value_quadratic(w: np.ndarray, u: np.ndarray, tau: float) -> float:
    """Positive root of (tau^2 - ||w||^2) lam^2 - 2 w.u lam - ||u||^2 = 0."""
    uu = float(u @ u)
    if uu == 0.0:
        return 0.0
    a = tau * tau - float(w @ w)
    bh = float(w @ u)  # half the linear coefficient, negated
    disc = bh * bh + a * uu
    return (bh + math.sqrt(disc)) / a


def gauge(oracle: GaugeOracle, y) -> GaugeEval:
    """Evaluate the gauge of the oracle's set about its center at y."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("query point must be finite")
    s = oracle.set
    e = oracle.e
    d = y - e
    if not np.any(d):
        return _zero_eval(y.size)

    if isinstance(s, Halfspace):
        num = float(s.a @ d)
        if num <= 0.0:
            return _zero_eval(y.size)
        value = num / (s.b - float(s.a @ e))
        return _finish_eval(oracle, y, value)

    if isinstance(s, Ball):
        value = _gauge_value_quadratic(e - s.c, d, s.r)
        return _finish_eval(oracle, y, value)

    if isinstance(s, PNormBall):
        w = e - s.offset
        if s.p == 2.0:
            value = _gauge_value_quadratic(w, d, 1.0)
        elif s.p == 4.0:
            value = _gauge_value_quartic(w, d, 1.0)
        else:
            value = _gauge_value_pnorm(w, d, 1.0, s.p)
        return _finish_eval(oracle, y, value)

    if isinstance(s, PNormEllipsoid):
        w = s.residual(e)
        u = s.A @ d
        if s.p == 2.0:
            value = _gauge_value_quadratic(w, u, s.tau)
        elif s.p == 4.0:
            value = _gauge_value_quartic(w, u, s.tau)
        else:
            value = _gauge_value_pnorm(w, u, s.tau, s.p)
        return _finish_eval(oracle, y, value)

    if isinstance(s, HullBallOrigin):
        value = _hull_gauge_value(s, e, y)
        return _finish_eval(oracle, y, value)

    raise ValueError(f"unsupported set variant: {type(s).__name__}")


def _hull_gauge_value(s: HullBallOrigin, e: np.ndarray, y: np.ndarray) -> float:
    """Membership bisection for the hull witness (no closed form)."""
    d = float(np.linalg.norm(y - e))
    if d == 0.0:
        return 0.0
    R, D = s.radius_bounds(e)
    hi = d / R
    lo = d / D if D != math.inf else 0.0
    if not s.contains(e + (y - e) / hi):
        raise RuntimeError("hull gauge bracket broken")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if s.contains(e + (y - e) / mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return hi


def ball_gauge(c, r: float, z) -> float:
    """Gauge (inf form) about the origin of a ball that need not contain 0.

    Two branches: the degenerate case ||c|| = r uses the linear formula
    ||z||^2 / (2 c.z); otherwise the root of the membership quadratic,
    written as ||z||^2 / (c.z + sqrt(disc)) which stays stable as
    ||c|| -> r.  Returns inf when no positive scaling of z meets the ball.
    """
    c = np.asarray(c, dtype=float)
    z = np.asarray(z, dtype=float)
    zz = float(z @ z)
    if zz == 0.0:
        return 0.0
    k = r * r - float(c @ c)
    cz = float(c @ z)
    if abs(k) <= 1e-14 * r * r:
        if cz <= 0.0:
            return math.inf
        return zz / (2.0 * cz)
    disc = cz * cz + k * zz
    if disc < 0.0:
        return math.inf
    denom = cz + math.sqrt(disc)
    if denom <= 0.0:
        return math.inf
    return zz / denom


def ball_gauge_hessian(y_bar, zeta, r: float) -> np.ndarray:
    """Hessian of half the squared gauge of the ball B(y_bar - r zeta, r) at y_bar.

    Exact rank-two-plus-identity closed form; requires zeta.y_bar > 0 so the
    origin lies inside the supporting cone of the ball.
    """
    y_bar = np.asarray(y_bar, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    zb = r * zeta
    s = float(zb @ y_bar)
    if s <= 0.0:
        raise ValueError("origin not interior to supporting cone (zeta.y_bar <= 0)")
    n = y_bar.size
    d2 = float(y_bar @ y_bar)
    H = (
        (s + d2) * np.outer(zb, zb)
        - s * (np.outer(zb, y_bar) + np.outer(y_bar, zb))
        + s * s * np.eye(n)
    )
    return H / s**3


def hessian_eigenvalues(y_bar, zeta, r: float):
    """Closed-form eigenvalues of the ball-gauge Hessian.

    Returns (lam_min, lam_mid, lam_max, lam_min_lower_bound,
    lam_max_upper_bound); lam_mid has multiplicity n - 2.
    """
    y_bar = np.asarray(y_bar, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    s = float(zeta @ y_bar)
    if s <= 0.0:
        raise ValueError("origin not interior to supporting cone (zeta.y_bar <= 0)")
    d2 = float(y_bar @ y_bar)
    a = s + d2 / r
    disc = a * a - 4.0 * s**3 / r
    if disc < -1e-12 * max(1.0, a * a):
        raise ValueError("negative eigenvalue discriminant: corrupted input")
    root = math.sqrt(max(disc, 0.0))
    lam_min = (a - root) / (2.0 * s**3)
    lam_max = (a + root) / (2.0 * s**3)
    lam_mid = 1.0 / (r * s)
    return lam_min, lam_mid, lam_max, (1.0 / r) / a, a / s**3


def rank2_eigenvalues(a, b, C1: float, C2: float, C3: float) -> tuple[float, float]:
    """Nontrivial eigenvalues of C1 aa^T + C2 (ab^T + ba^T) + C3 bb^T.

    The two roots of the characteristic quadratic; all remaining
    eigenvalues are zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aa = float(a @ a)
    bb = float(b @ b)
    ab = float(a @ b)
    tr = C1 * aa + 2.0 * C2 * ab + C3 * bb
    det = (C1 * C3 - C2 * C2) * (aa * bb - ab * ab)
    disc = max(tr * tr - 4.0 * det, 0.0)
    root = math.sqrt(disc)
    return (tr - root) / 2.0, (tr + root) / 2.0


def local_structure(ev: GaugeEval, e, alpha: float, beta: float) -> LocalStructure:
    """Local constants of half the squared gauge at the evaluated boundary point.

    Given the set's (alpha, beta), with s = zeta.(y_bar - e) and
    d = ||y_bar - e||, the strong convexity and smoothness constants are
    the closed forms (s + a d^2 -/+ sqrt((s + a d^2)^2 - 4 a s^3)) / (2 s^3)
    and their simpler outer bounds a / (s + a d^2) and (s + b d^2) / s^3.
    """
    if ev.value <= 0.0 or ev.boundary_point is None:
        raise ValueError("local structure requires a positive gauge value")
    e = np.asarray(e, dtype=float)
    yb = ev.boundary_point - e
    s = float(ev.unit_normal @ yb)
    if s <= 0.0:
        raise ValueError("center not inside the supporting cone")
    d2 = float(yb @ yb)

    def sc_value(a: float) -> float:
        t = s + a * d2
        disc = max(t * t - 4.0 * a * s**3, 0.0)
        return (t - math.sqrt(disc)) / (2.0 * s**3)

    mu_local = 0.0 if alpha == 0.0 else sc_value(alpha)
    mu_lower = 0.0 if alpha == 0.0 else alpha / (s + alpha * d2)
    if beta == math.inf:
        L_local = math.inf
        L_upper = math.inf
    else:
        t = s + beta * d2
        disc = max(t * t - 4.0 * beta * s**3, 0.0)
        L_local = (t + math.sqrt(disc)) / (2.0 * s**3)
        L_upper = t / s**3
    return LocalStructure(mu_local, L_local, mu_lower, L_upper)


def global_structure(oracle: GaugeOracle) -> tuple[float, float]:
    """Global (mu, L) of half the squared gauge from the set constants.

    mu = alpha / (D + alpha D^2) and L = (R + beta D^2) / R^3, with the
    conventions mu = 0 when alpha = 0 or the set is unbounded, and
    L = inf when beta = inf (or beta > 0 with D = inf).
    """
    sc = oracle.set.structure_constants()
    R, D = oracle.R, oracle.D
    if sc.alpha == 0.0 or D == math.inf:
        mu = 0.0
    else:
        mu = sc.alpha / (D + sc.alpha * D * D)
    if sc.beta == math.inf:
        L = math.inf
    elif sc.beta == 0.0:
        L = 1.0 / (R * R)
    elif D == math.inf:
        L = math.inf
    else:
        L = (R + sc.beta * D * D) / R**3
    return mu, L


def transform_structure(mu: float, L: float, A) -> tuple[float, float]:
    """Constants of the gauge squared composed with x -> A x."""
    A = np.asarray(A, dtype=float)
    evals = np.linalg.eigvalsh(A.T @ A)
    lam_min = float(max(evals[0], 0.0))
    lam_max = float(max(evals[-1], 0.0))
    mu_out = lam_min * mu
    L_out = math.inf if L == math.inf and lam_max > 0 else lam_max * L
    return mu_out, L_out


def offset_unit_ball_constants(offset_norm: float) -> tuple[float, float]:
    """Tight global (mu, L) for the gauge squared of a unit ball offset from center.

    For {x : ||x - b|| <= 1} with gauge center at the origin and
    t = ||b|| < 1: mu = 1 / ((1 + t)(2 + t)), L = (2 - t) / (1 - t)^2.
    """
    t = float(offset_norm)
    if not 0.0 <= t < 1.0:
        raise ValueError("offset norm must lie in [0, 1)")
    return 1.0 / ((1.0 + t) * (2.0 + t)), (2.0 - t) / (1.0 - t) ** 2


def ellipsoid_gauge_constants(s: PNormEllipsoid) -> tuple[float, float]:
    """Tight global (mu, L) for a 2-norm ellipsoid's gauge squared about 0.

    Pushes the offset-ball constants through the affine map x -> (A/tau) x.
    """
    if s.p != 2.0:
        raise ValueError("closed-form constants only available for p = 2")
    bn = float(np.linalg.norm(s.b)) / s.tau
    mu_t, L_t = offset_unit_ball_constants(bn)
    lam_min = s.lam_min / s.tau**2
    lam_max = s.lam_max / s.tau**2
    return lam_min * mu_t, lam_max * L_t


def converse_certificate(ev: GaugeEval, mu: float, L: float, e=None):
    """Ball certificates implied by (mu, L) of the gauge squared at a point.

    Returns (outer_ball, inner_ball): the outer ball must locally contain
    the set near the boundary point, the inner ball must locally sit
    inside it.  Either is None when the corresponding constant is absent.
    """
    if ev.value <= 0.0 or ev.boundary_point is None:
        raise ValueError("certificate requires a positive gauge value")
    yb = ev.boundary_point
    zeta = ev.unit_normal
    if e is None:
        e = np.zeros_like(yb)
    s = float(zeta @ (yb - np.asarray(e, dtype=float)))
    outer = None
    inner = None
    if mu > 0.0:
        r_out = 1.0 / (mu * s)
        outer = Ball(yb - r_out * zeta, r_out)
    if L != math.inf and L > 0.0:
        r_in = 1.0 / (L * s)
        inner = Ball(yb - r_in * zeta, r_in)
    return outer, inner


def tightness_instance(gamma: float, R: float, D: float):
    """Witness set showing the smoothness/strong-convexity formulas are tight.

    Builds conv({0} union B(c, gamma)) with boundary point
    y_bar = (sqrt(D^2 - R^2), -R), normal zeta = (0, -1), and
    c = y_bar - gamma zeta.  Restricted to gamma <= R so the origin stays
    inside the gauge's domain of validity.
    """
    if not (0.0 < R <= D):
        raise ValueError("require 0 < R <= D")
    if not (0.0 < gamma <= R):
        raise ValueError("require 0 < gamma <= R")
    y_bar = np.array([math.sqrt(max(D * D - R * R, 0.0)), -R])
    zeta = np.array([0.0, -1.0])
    c = y_bar - gamma * zeta
    return HullBallOrigin(c, gamma), y_bar, zeta


def estimate_constants_by_sampling(
    oracle: GaugeOracle, samples: int, rng=None
) -> tuple[float, float]:
    """Sampled (mu, L) estimate: extreme local constants over random boundary points.

    Draws directions uniformly on the sphere, scales each to the boundary
    through the gauge, evaluates the local closed forms with the set's
    pointwise constants, and returns (min mu_local, max L_local).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    s = oracle.set
    e = oracle.e
    n = s.dim

    if isinstance(s, PNormBall) and np.array_equal(e, s.offset):
        return _estimate_pnorm_centered(s, samples, rng)

    mu_est = math.inf
    L_est = 0.0
    for _ in range(samples):
        u = rng.standard_normal(n)
        nu = float(np.linalg.norm(u))
        if nu == 0.0:
            continue
        ev = gauge(oracle, e + u / nu)
        sc = pointwise_constants(s, ev.boundary_point)
        loc = local_structure(ev, e, sc.alpha, sc.beta)
        mu_est = min(mu_est, loc.mu_local)
        L_est = max(L_est, loc.L_local)
    return mu_est, L_est


def _estimate_pnorm_centered(s: PNormBall, samples: int, rng) -> tuple[float, float]:
    """Vectorized sampler for a p-ball with the gauge centered at its offset."""
    p = s.p
    n = s.dim
    u = rng.standard_normal((samples, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    scale = np.sum(np.abs(u) ** p, axis=1) ** (1.0 / p)
    x = u / scale[:, None]  # boundary points relative to the offset
    az = np.abs(x)
    grad = p * az ** (p - 1.0)
    gnorm = np.linalg.norm(grad, axis=1)
    zeta_dot_x = np.sum(grad * np.sign(x) * x, axis=1) / gnorm
    d2 = np.sum(x * x, axis=1)
    zmax = np.max(az, axis=1)
    zmin = np.min(az, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if p >= 2.0:
            beta_pt = p * (p - 1.0) * zmax ** (p - 2.0) / gnorm
            alpha_pt = p * (p - 1.0) * zmin ** (p - 2.0) / gnorm
        else:
            beta_pt = np.where(
                zmin == 0.0, np.inf, p * (p - 1.0) * zmin ** np.float64(p - 2.0) / gnorm
            )
            alpha_pt = p * (p - 1.0) * zmax ** (p - 2.0) / gnorm
    sv = zeta_dot_x
    t_mu = sv + alpha_pt * d2
    mu_loc = (t_mu - np.sqrt(np.maximum(t_mu * t_mu - 4.0 * alpha_pt * sv**3, 0.0))) / (
        2.0 * sv**3
    )
    finite = np.isfinite(beta_pt)
    t_L = sv + beta_pt * d2
    L_loc = np.where(
        finite,
        (t_L + np.sqrt(np.maximum(t_L * t_L - 4.0 * beta_pt * sv**3, 0.0))) / (2.0 * sv**3),
        np.inf,
    )
    return float(np.min(mu_loc)), float(np.max(L_loc))
