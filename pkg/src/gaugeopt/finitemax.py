"""Finite-max minimization targets.

Builds the unconstrained objectives the solvers minimize: the gauge
feasibility objective max_i gamma_i(y) and the radial dual
max{f_radial(y), gamma_S(y)} of constrained concave-quadratic
maximization, together with metadata propagation (M, mu, L), conjugate
gradient recentering, and primal recovery.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .gauge import GaugeOracle, gauge, global_structure

__all__ = [
    "ComponentFunction",
    "GaugeComponent",
    "RadialQuadraticComponent",
    "FiniteMaxProblem",
    "QuadraticObjective",
    "feasibility_problem",
    "radial_quadratic",
    "radial_dual_problem",
    "recover_primal",
    "recenter",
]


class ComponentFunction:
    """Contract: a nonnegative convex function with subgradients of f^2/2.

    Attributes M (Lipschitz constant of f), mu and L (strong convexity and
    smoothness of f^2/2) are metadata used by stepsize schedules and rate
    bounds; inf/0 sentinels follow the sets-module conventions.
    """

    M: float
    mu: float
    L: float

    def eval(self, y) -> float:
        raise NotImplementedError

    def half_sq_subgrad(self, y) -> np.ndarray:
        raise NotImplementedError

    def eval_pair(self, y) -> tuple[float, np.ndarray]:
        """(f(y), element of the subdifferential of f^2/2 at y)."""
        return self.eval(y), self.half_sq_subgrad(y)


class GaugeComponent(ComponentFunction):
    """Gauge of a structured set about an interior center."""

    def __init__(self, oracle: GaugeOracle):
        self.oracle = oracle
        self.M = oracle.lipschitz_M
        self.mu, self.L = global_structure(oracle)

    def eval(self, y) -> float:
        return gauge(self.oracle, y).value

    def half_sq_subgrad(self, y) -> np.ndarray:
        return gauge(self.oracle, y).half_sq_subgrad

    def eval_pair(self, y) -> tuple[float, np.ndarray]:
        ev = gauge(self.oracle, y)
        return ev.value, ev.half_sq_subgrad


class QuadraticObjective:
    """Concave quadratic f(x) = 1 - x^T Q x / 2 - c^T x with Q PSD."""

    def __init__(self, Q, c):
        self.Q = np.asarray(Q, dtype=float)
        self.c = np.asarray(c, dtype=float)
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12 * max(1.0, float(np.abs(self.Q).max()))):
            raise ValueError("Q must be symmetric")
        if self.c.shape[0] != self.Q.shape[0]:
            raise ValueError("c length must match Q")
        self.Q.flags.writeable = False
        self.c.flags.writeable = False

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 1.0 - 0.5 * float(x @ self.Q @ x) - float(self.c @ x)


def radial_quadratic(q: QuadraticObjective, y) -> tuple[float, np.ndarray]:
    """Radial transform of the concave quadratic and the gradient of its half square.

    value = (c.y + 1 + sqrt((c.y + 1)^2 + 2 y^T Q y)) / 2, the unique
    v > 0 with v f(y/v) = 1; gradient follows by the chain rule.
    """
    y = np.asarray(y, dtype=float)
    s = float(q.c @ y) + 1.0
    Qy = q.Q @ y
    two_q = 2.0 * float(y @ Qy)
    root = math.sqrt(max(s * s + two_q, 0.0))
    value = 0.5 * (s + root)
    if root == 0.0:
        grad_v = 0.5 * q.c
    else:
        grad_v = 0.5 * (q.c + (s * q.c + 2.0 * Qy) / root)
    return value, value * grad_v


class RadialQuadraticComponent(ComponentFunction):
    """Radially transformed concave quadratic with sampled metadata."""

    def __init__(self, q: QuadraticObjective, sample_radius: float = 1.0, seed: int = 0):
        self.q = q
        self._estimate_metadata(sample_radius, seed)

    def _estimate_metadata(self, radius: float, seed: int, count: int = 100):
        # No closed-form constants exist; estimate them from finite
        # differences at sampled points in a ball around the origin.
        rng = np.random.default_rng(seed)
        n = self.q.c.size
        L_est = 1e-12
        mu_est = math.inf
        M_est = 1e-12
        h = 1e-5

        for _ in range(count):
            u = rng.standard_normal(n)
            y = u * (radius * rng.random() ** (1.0 / n) / np.linalg.norm(u))
            v, g = radial_quadratic(self.q, y)
            if v > 0:
                M_est = max(M_est, float(np.linalg.norm(g)) / v)
            # Central differences on the exact half-squared gradient.
            H = np.zeros((n, n))
            for i in range(n):
                ei = np.zeros(n)
                ei[i] = h
                H[i] = (
                    radial_quadratic(self.q, y + ei)[1]
                    - radial_quadratic(self.q, y - ei)[1]
                ) / (2.0 * h)
            evals = np.linalg.eigvalsh(0.5 * (H + H.T))
            L_est = max(L_est, float(evals[-1]))
            mu_est = min(mu_est, max(float(evals[0]), 0.0))
        self.M = M_est
        self.mu = 0.0 if mu_est == math.inf else mu_est
        self.L = L_est

    def eval(self, y) -> float:
        return radial_quadratic(self.q, y)[0]

    def half_sq_subgrad(self, y) -> np.ndarray:
        return radial_quadratic(self.q, y)[1]

    def eval_pair(self, y) -> tuple[float, np.ndarray]:
        return radial_quadratic(self.q, y)


class FiniteMaxProblem:
    """min_y max_i f_i(y) over nonnegative convex components."""

    def __init__(self, components, p_star_hint: float | None = None):
        self.components = list(components)
        if not self.components:
            raise ValueError("need at least one component")
        self.M = max(c.M for c in self.components)
        self.mu = min(c.mu for c in self.components)
        self.L = max(c.L for c in self.components)
        self.p_star_hint = p_star_hint
        self.m = len(self.components)

    def objective(self, y) -> float:
        return max(c.eval(y) for c in self.components)

    def component_values(self, y) -> np.ndarray:
        return np.array([c.eval(y) for c in self.components])

    def component_pairs(self, y):
        """Arrays (f_i(y)) and stacked subgradients of f_i^2/2."""
        vals = np.empty(self.m)
        grads = np.empty((self.m, np.asarray(y).shape[0]))
        for i, c in enumerate(self.components):
            vals[i], grads[i] = c.eval_pair(y)
        return vals, grads

    def half_sq(self, y) -> float:
        return 0.5 * self.objective(y) ** 2


def feasibility_problem(oracles) -> FiniteMaxProblem:
    """Gauge feasibility objective: min_y max_i gamma_i(y); feasible iff <= 1."""
    oracles = list(oracles)
    dims = {o.set.dim for o in oracles}
    if len(dims) != 1:
        raise ValueError("all sets must share one ambient dimension")
    return FiniteMaxProblem([GaugeComponent(o) for o in oracles])


def radial_dual_problem(
    q: QuadraticObjective, constraint: GaugeOracle, seed: int = 0
) -> FiniteMaxProblem:
    """Radial dual of maximizing the concave quadratic over the constraint set.

    Requires the constraint gauge centered at the origin (recenter and
    translate the instance first) and f(0) = 1 > 0.
    """
    if np.any(constraint.e):
        raise ValueError("constraint oracle must be centered at the origin")
    if q.c.size != constraint.set.dim:
        raise ValueError("dimension mismatch")
    return FiniteMaxProblem(
        [RadialQuadraticComponent(q, seed=seed), GaugeComponent(constraint)]
    )


def recover_primal(problem: FiniteMaxProblem, y) -> tuple[np.ndarray, float]:
    """Map a radial-dual point back to the primal: x = y / F(y), value 1 / F(y)."""
    y = np.asarray(y, dtype=float)
    F = problem.objective(y)
    if F <= 0.0:
        raise ValueError("dual objective must be positive for primal recovery")
    return y / F, 1.0 / F


def recenter(A, b, iterations: int = 30) -> np.ndarray:
    """Approximate least-squares solution of A x = b by conjugate gradient.

    Runs exactly ``iterations`` CGLS iterations (conjugate gradient on the
    normal equations without forming A^T A) from x0 = 0.  Used to produce
    interior centers; callers verify interiority.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.any(A):
        raise ValueError("A must be nonzero")
    x = np.zeros(A.shape[1])
    r = b - A @ x
    s = A.T @ r
    p = s.copy()
    gamma = float(s @ s)
    for _ in range(iterations):
        if gamma == 0.0:
            break
        q = A @ p
        qq = float(q @ q)
        if qq == 0.0:
            break
        step = gamma / qq
        x = x + step * p
        r = r - step * q
        s = A.T @ r
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return x


def problem_to_json(kind: str, *, seed: int, n: int, m: int, payload: dict) -> str:
    """Serialize a problem instance description."""
    data = {"kind": kind, "seed": seed, "n": n, "m": m}
    data.update(payload)
    return json.dumps(data)
