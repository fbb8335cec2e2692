"""Structured convex set representations.

Each set variant supports membership testing, boundary normal vectors,
strong-convexity/smoothness constant bookkeeping, and safe inner/outer
radius bounds about an interior point.  Conventions for the constant
pair (alpha, beta):

* ``alpha = 0``   means the set is not strongly convex.
* ``beta = inf``  means the set is not smooth.
* ``beta = 0``    means the set is "infinitely smooth": inner tangent
  balls of every radius fit inside (halfspaces).  Downstream smoothness
  formulas take the ``beta -> 0`` limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StructureConstants",
    "StructuredSet",
    "Halfspace",
    "Ball",
    "PNormBall",
    "PNormEllipsoid",
    "HullBallOrigin",
    "AmbiguousNormalError",
    "contains",
    "normal_vector",
    "structure_constants",
    "pointwise_constants",
    "combine_constants",
    "radius_bounds",
    "set_to_json",
    "set_from_json",
]

BOUNDARY_RTOL = 1e-8


class AmbiguousNormalError(ValueError):
    """Raised when a boundary point has no canonical single normal."""


@dataclass(frozen=True)
class StructureConstants:
    """Strong convexity / smoothness pair (alpha, beta) of a set."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative or inf")


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a 1-d vector")
    return v


def _check_dim(set_dim: int, x: np.ndarray):
    if x.shape[0] != set_dim:
        raise ValueError(f"dimension mismatch: set is {set_dim}-d, point is {x.shape[0]}-d")


def _on_boundary(lhs: float, rhs: float) -> bool:
    return abs(lhs - rhs) <= BOUNDARY_RTOL * max(1.0, abs(rhs))


def _pnorm_ball_inner_outer(p: float, n: int) -> tuple[float, float]:
    """Euclidean radii (r_in, r_out) with B2(0,r_in) <= Bp(0,1) <= B2(0,r_out)."""
    if p >= 2.0:
        return 1.0, n ** (0.5 - 1.0 / p)
    return n ** (0.5 - 1.0 / p), 1.0


class StructuredSet:
    """Base class; all variants are immutable and pure."""

    dim: int

    def contains(self, x) -> bool:
        raise NotImplementedError

    def normal_vector(self, x) -> np.ndarray:
        raise NotImplementedError

    def structure_constants(self) -> StructureConstants:
        raise NotImplementedError

    def pointwise_constants(self, x) -> StructureConstants:
        """Strong convexity/smoothness constants valid at one boundary point."""
        return self.structure_constants()

    def radius_bounds(self, e) -> tuple[float, float]:
        raise NotImplementedError

    def to_payload(self) -> dict:
        raise NotImplementedError


class Halfspace(StructuredSet):
    """{x : a^T x <= b} with b > 0 so the origin is strictly interior."""

    kind = "halfspace"

    def __init__(self, a, b: float):
        self.a = _as_vector(a)
        self.b = float(b)
        if self.b <= 0:
            raise ValueError("halfspace offset b must be positive")
        if not np.any(self.a):
            raise ValueError("halfspace normal a must be nonzero")
        self.dim = self.a.shape[0]
        self.a.flags.writeable = False

    def contains(self, x) -> bool:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        return float(self.a @ x) <= self.b

    def normal_vector(self, x) -> np.ndarray:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        if not _on_boundary(float(self.a @ x), self.b):
            raise ValueError("point is not on the halfspace boundary")
        return self.a / np.linalg.norm(self.a)

    def structure_constants(self) -> StructureConstants:
        # beta = 0 encodes "inner balls of every radius fit".
        return StructureConstants(alpha=0.0, beta=0.0)

    def radius_bounds(self, e) -> tuple[float, float]:
        e = _as_vector(e)
        _check_dim(self.dim, e)
        slack = self.b - float(self.a @ e)
        if slack <= 0:
            raise ValueError("center e is not strictly interior")
        return slack / float(np.linalg.norm(self.a)), math.inf

    def to_payload(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b}


class Ball(StructuredSet):
    """Euclidean ball {x : ||x - c||_2 <= r}."""

    kind = "ball"

    def __init__(self, c, r: float):
        self.c = _as_vector(c)
        self.r = float(r)
        if self.r <= 0:
            raise ValueError("ball radius must be positive")
        self.dim = self.c.shape[0]
        self.c.flags.writeable = False

    def contains(self, x) -> bool:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        return float(np.linalg.norm(x - self.c)) <= self.r

    def normal_vector(self, x) -> np.ndarray:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        d = float(np.linalg.norm(x - self.c))
        if not _on_boundary(d, self.r):
            raise ValueError("point is not on the sphere")
        return (x - self.c) / d

    def structure_constants(self) -> StructureConstants:
        return StructureConstants(alpha=1.0 / self.r, beta=1.0 / self.r)

    def radius_bounds(self, e) -> tuple[float, float]:
        e = _as_vector(e)
        _check_dim(self.dim, e)
        off = float(np.linalg.norm(e - self.c))
        if off >= self.r:
            raise ValueError("center e is not strictly interior")
        return self.r - off, self.r + off

    def to_payload(self) -> dict:
        return {"c": self.c.tolist(), "r": self.r}


class PNormBall(StructuredSet):
    """Translated unit p-norm ball {x : ||x - offset||_p <= 1}, p in (1, inf)."""

    kind = "pnorm_ball"

    def __init__(self, p: float, offset):
        self.p = float(p)
        if not (1.0 < self.p < math.inf):
            raise ValueError("p must lie in (1, inf)")
        self.offset = _as_vector(offset)
        self.dim = self.offset.shape[0]
        self.offset.flags.writeable = False

    def _pnorm(self, z: np.ndarray) -> float:
        return float(np.sum(np.abs(z) ** self.p) ** (1.0 / self.p))

    def contains(self, x) -> bool:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        return self._pnorm(x - self.offset) <= 1.0

    def normal_vector(self, x) -> np.ndarray:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        z = x - self.offset
        if not _on_boundary(self._pnorm(z), 1.0):
            raise ValueError("point is not on the p-ball boundary")
        g = np.sign(z) * np.abs(z) ** (self.p - 1.0)
        return g / np.linalg.norm(g)

    def structure_constants(self) -> StructureConstants:
        k = (self.p - 1.0) * self.dim ** (0.5 - 1.0 / self.p)
        if self.p < 2.0:
            return StructureConstants(alpha=k, beta=math.inf)
        if self.p == 2.0:
            return StructureConstants(alpha=1.0, beta=1.0)
        return StructureConstants(alpha=0.0, beta=k)

    def pointwise_constants(self, x) -> StructureConstants:
        # Level-set reading of the defining function f(x) = ||x - offset||_p^p:
        # constants are the extreme Hessian eigenvalues of f at the point
        # divided by the gradient norm.
        x = _as_vector(x)
        _check_dim(self.dim, x)
        z = np.abs(x - self.offset)
        p = self.p
        gnorm = float(np.linalg.norm(p * z ** (p - 1.0)))
        if gnorm == 0.0:
            raise ValueError("gradient of the defining function vanishes")
        zmax = float(np.max(z))
        zmin = float(np.min(z))
        with np.errstate(divide="ignore"):
            if p >= 2.0:
                hi = p * (p - 1.0) * zmax ** (p - 2.0)
                lo = p * (p - 1.0) * zmin ** (p - 2.0)
            else:
                hi = math.inf if zmin == 0.0 else p * (p - 1.0) * zmin ** (p - 2.0)
                lo = p * (p - 1.0) * zmax ** (p - 2.0)
        return StructureConstants(alpha=lo / gnorm, beta=hi / gnorm if hi != math.inf else math.inf)

    def radius_bounds(self, e) -> tuple[float, float]:
        e = _as_vector(e)
        _check_dim(self.dim, e)
        u = e - self.offset
        up = self._pnorm(u)
        if up >= 1.0:
            raise ValueError("center e is not strictly interior")
        r_in, r_out = _pnorm_ball_inner_outer(self.p, self.dim)
        off2 = float(np.linalg.norm(u))
        # Safe-side inner radius: best of the direct euclidean bound and the
        # star-shaped scaling bound (1 - gauge about the offset) * r_in.
        R = max(r_in - off2, (1.0 - up) * r_in)
        D = r_out + off2
        return R, D

    def to_payload(self) -> dict:
        return {"p": self.p, "offset": self.offset.tolist()}


class PNormEllipsoid(StructuredSet):
    """{x : ||A x - b||_p <= tau} with dense A (m x n), p in (1, inf)."""

    kind = "pnorm_ellipsoid"

    def __init__(self, A, b, p: float, tau: float = 1.0):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        self.b = _as_vector(b)
        if self.b.shape[0] != self.A.shape[0]:
            raise ValueError("b length must match rows of A")
        self.p = float(p)
        if not (1.0 < self.p < math.inf):
            raise ValueError("p must lie in (1, inf)")
        self.tau = float(tau)
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        self.dim = self.A.shape[1]
        self.rows = self.A.shape[0]
        # Spectrum of A^T A, cached for constant propagation.
        evals = np.linalg.eigvalsh(self.A.T @ self.A)
        self.lam_min = float(max(evals[0], 0.0))
        self.lam_max = float(max(evals[-1], 0.0))
        self.A.flags.writeable = False
        self.b.flags.writeable = False

    def _pnorm(self, z: np.ndarray) -> float:
        return float(np.sum(np.abs(z) ** self.p) ** (1.0 / self.p))

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x - self.b

    def contains(self, x) -> bool:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        return self._pnorm(self.residual(x)) <= self.tau

    def normal_vector(self, x) -> np.ndarray:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        z = self.residual(x)
        if not _on_boundary(self._pnorm(z), self.tau):
            raise ValueError("point is not on the ellipsoid boundary")
        g = self.A.T @ (np.sign(z) * np.abs(z) ** (self.p - 1.0))
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            raise AmbiguousNormalError("normal direction degenerate at this point")
        return g / gn

    def structure_constants(self) -> StructureConstants:
        # Normalize to the unit-ball form ||(A/tau) x - b/tau||_p <= 1.
        lam_min = self.lam_min / self.tau**2
        lam_max = self.lam_max / self.tau**2
        base = PNormBall(self.p, np.zeros(self.rows)).structure_constants()
        alpha = 0.0
        if base.alpha > 0 and lam_max > 0:
            alpha = base.alpha * lam_min / math.sqrt(lam_max)
        if base.beta == math.inf or lam_min == 0.0:
            beta = math.inf
        else:
            beta = base.beta * lam_max / math.sqrt(lam_min)
        return StructureConstants(alpha=alpha, beta=beta)

    def pointwise_constants(self, x) -> StructureConstants:
        # Level-set reading of f(x) = ||A x - b||_p^p at a boundary point.
        x = _as_vector(x)
        _check_dim(self.dim, x)
        z = self.residual(x)
        p = self.p
        az = np.abs(z)
        g = self.A.T @ (p * np.sign(z) * az ** (p - 1.0))
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            raise ValueError("gradient of the defining function vanishes")
        if p < 2.0 and np.any(az == 0.0):
            return StructureConstants(alpha=0.0, beta=math.inf)
        w = p * (p - 1.0) * az ** (p - 2.0)
        H = self.A.T @ (w[:, None] * self.A)
        evals = np.linalg.eigvalsh(H)
        lo = max(float(evals[0]), 0.0)
        hi = float(evals[-1])
        return StructureConstants(alpha=lo / gnorm, beta=hi / gnorm)

    def radius_bounds(self, e) -> tuple[float, float]:
        e = _as_vector(e)
        _check_dim(self.dim, e)
        w = self.residual(e) / self.tau
        wp = float(np.sum(np.abs(w) ** self.p) ** (1.0 / self.p))
        if wp >= 1.0:
            raise ValueError("center e is not strictly interior")
        r_in, r_out = _pnorm_ball_inner_outer(self.p, self.rows)
        sig_max = math.sqrt(self.lam_max) / self.tau
        sig_min = math.sqrt(self.lam_min) / self.tau
        if sig_max == 0.0:
            raise ValueError("A must be nonzero")
        R = (1.0 - wp) * r_in / sig_max
        if sig_min > 0:
            D = (r_out + float(np.linalg.norm(w))) / sig_min
        else:
            D = math.inf
        return R, D

    def to_payload(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "p": self.p, "tau": self.tau}


class HullBallOrigin(StructuredSet):
    """conv({0} union B(c, rho)): the lower-bound witness construction."""

    kind = "hull_ball_origin"

    def __init__(self, c, rho: float):
        self.c = _as_vector(c)
        self.rho = float(rho)
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        self.dim = self.c.shape[0]
        self.c.flags.writeable = False

    def _margin(self, x: np.ndarray) -> float:
        """min over t in (0,1] of ||x - t c|| - t rho; <= 0 iff x is a member."""
        best = float(np.linalg.norm(x - self.c)) - self.rho  # t = 1
        k = float(self.c @ self.c) - self.rho**2
        if k > 0:
            t = float(self.c @ x) / k
            t = min(max(t, 1e-300), 1.0)
            best = min(best, float(np.linalg.norm(x - t * self.c)) - t * self.rho)
        return best

    def contains(self, x) -> bool:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        if not np.any(x):
            return True  # the origin is a member by construction
        return self._margin(x) <= 0.0

    def normal_vector(self, x) -> np.ndarray:
        x = _as_vector(x)
        _check_dim(self.dim, x)
        nx = float(np.linalg.norm(x))
        if nx <= BOUNDARY_RTOL * max(1.0, self.rho):
            raise AmbiguousNormalError("apex of the hull has no canonical normal")
        d = float(np.linalg.norm(x - self.c))
        on_sphere = _on_boundary(d, self.rho)
        seam_ok = on_sphere and float((x - self.c) @ x) > BOUNDARY_RTOL * self.rho * nx
        if not seam_ok:
            raise AmbiguousNormalError(
                "normal only defined on the interior of the spherical facet"
            )
        if abs(self._margin(x)) > BOUNDARY_RTOL * max(1.0, self.rho):
            raise ValueError("point is not on the hull boundary")
        return (x - self.c) / d

    def structure_constants(self) -> StructureConstants:
        # The apex at the origin destroys both global properties.
        return StructureConstants(alpha=0.0, beta=math.inf)

    def radius_bounds(self, e) -> tuple[float, float]:
        e = _as_vector(e)
        _check_dim(self.dim, e)
        off = float(np.linalg.norm(e - self.c))
        if off >= self.rho:
            raise ValueError("center e must lie strictly inside the ball part")
        R = self.rho - off
        D = max(float(np.linalg.norm(e)), off + self.rho)
        return R, D

    def to_payload(self) -> dict:
        return {"c": self.c.tolist(), "rho": self.rho}


# ---------------------------------------------------------------------------
# Module-level operation wrappers


def contains(s: StructuredSet, x) -> bool:
    """Exact membership test on the variant's defining inequality."""
    return s.contains(x)


def normal_vector(s: StructuredSet, x) -> np.ndarray:
    """Unit outward normal at a boundary point (checked to 1e-8 relative)."""
    return s.normal_vector(x)


def structure_constants(s: StructuredSet) -> StructureConstants:
    """Global (alpha, beta) pair of the set."""
    return s.structure_constants()


def pointwise_constants(s: StructuredSet, x) -> StructureConstants:
    """(alpha, beta) valid locally at one boundary point."""
    return s.pointwise_constants(x)


def radius_bounds(s: StructuredSet, e) -> tuple[float, float]:
    """Safe-side inscribed/circumscribed euclidean radii about interior e."""
    return s.radius_bounds(e)


def _inv(x: float) -> float:
    if x == 0.0:
        return math.inf
    if x == math.inf:
        return 0.0
    return 1.0 / x


def combine_constants(op: str, inputs, A=None) -> StructureConstants:
    """Propagate (alpha, beta) through affine preimage, Minkowski sum, or intersection.

    ``op`` is one of ``"affine"`` (requires the matrix ``A``),
    ``"minkowski_sum"`` (exactly two inputs), or ``"intersection"``.
    """
    inputs = list(inputs)
    if op == "affine":
        if A is None:
            raise ValueError("affine combination requires the matrix A")
        if len(inputs) != 1:
            raise ValueError("affine combination takes one input")
        sc = inputs[0]
        evals = np.linalg.eigvalsh(np.asarray(A, dtype=float).T @ np.asarray(A, dtype=float))
        lam_min = float(max(evals[0], 0.0))
        lam_max = float(max(evals[-1], 0.0))
        alpha = 0.0 if lam_min == 0.0 else sc.alpha * lam_min / math.sqrt(lam_max)
        if sc.beta == math.inf or lam_min == 0.0:
            beta = math.inf
        else:
            beta = sc.beta * lam_max / math.sqrt(lam_min)
        return StructureConstants(alpha=alpha, beta=beta)
    if op == "minkowski_sum":
        if len(inputs) != 2:
            raise ValueError("minkowski_sum takes two inputs")
        s1, s2 = inputs
        alpha = _inv(_inv(s1.alpha) + _inv(s2.alpha))
        beta = _inv(_inv(s1.beta) + _inv(s2.beta))
        return StructureConstants(alpha=alpha, beta=beta)
    if op == "intersection":
        if not inputs:
            raise ValueError("intersection requires at least one input")
        return StructureConstants(alpha=min(sc.alpha for sc in inputs), beta=math.inf)
    raise ValueError(f"unknown combination op: {op}")


# ---------------------------------------------------------------------------
# JSON serialization

_KINDS = {
    "halfspace": lambda d: Halfspace(d["a"], d["b"]),
    "ball": lambda d: Ball(d["c"], d["r"]),
    "pnorm_ball": lambda d: PNormBall(d["p"], d["offset"]),
    "pnorm_ellipsoid": lambda d: PNormEllipsoid(d["A"], d["b"], d["p"], d.get("tau", 1.0)),
    "hull_ball_origin": lambda d: HullBallOrigin(d["c"], d["rho"]),
}


def set_to_json(s: StructuredSet) -> str:
    payload = {"kind": s.kind}
    payload.update(s.to_payload())
    return json.dumps(payload)


def set_from_json(text: str) -> StructuredSet:
    data = json.loads(text)
    kind = data.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown set kind: {kind}")
    return _KINDS[kind](data)
