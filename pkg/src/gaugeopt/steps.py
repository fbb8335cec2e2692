"""First-order step oracles for finite-max objectives.

Implements the three basic oracles on f = max_i f_i: the subgradient step
on f^2/2, the generalized (prox-linear) gradient step, and the level-set
projection step, each with exact two-component closed forms and an exact
enumeration fallback for small m, plus an Armijo linesearch wrapper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .finitemax import FiniteMaxProblem

__all__ = [
    "StepResult",
    "subgrad_step",
    "gen_grad_step",
    "level_proj_step",
    "armijo_gen_grad",
    "EmptyLevelSetError",
]


class EmptyLevelSetError(RuntimeError):
    """The linearized level set has no feasible point."""


@dataclass
class StepResult:
    next_point: np.ndarray
    active_components: list = field(default_factory=list)
    multipliers: list = field(default_factory=list)
    model_decrease: float = 0.0
    stalled: bool = False


def _models_at(f_vals: np.ndarray, V: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Linearized models m_i(z) = f_i^2/2 + v_i^T (z - y) with v_i = f_i g_i."""
    return 0.5 * f_vals**2 + V @ (z - y)


def subgrad_step(problem: FiniteMaxProblem, y, alpha: float) -> StepResult:
    """y - alpha f(y) g with g a subgradient of a maximizing component."""
    if alpha < 0:
        raise ValueError("stepsize must be nonnegative")
    y = np.asarray(y, dtype=float)
    f_vals, V = problem.component_pairs(y)
    i = int(np.argmax(f_vals))  # ties broken toward the lowest index
    z = y - alpha * V[i]
    return StepResult(
        next_point=z,
        active_components=[i],
        multipliers=[1.0],
        model_decrease=alpha * float(V[i] @ V[i]),
    )


def gen_grad_step(problem: FiniteMaxProblem, y, alpha: float) -> StepResult:
    """Exact minimizer of max_i m_i(z) + ||z - y||^2 / (2 alpha)."""
    if alpha <= 0:
        raise ValueError("stepsize must be positive")
    y = np.asarray(y, dtype=float)
    f_vals, V = problem.component_pairs(y)
    m = f_vals.size
    if m == 1:
        z = y - alpha * V[0]
        result = StepResult(z, [0], [1.0])
    elif m == 2:
        result = _gen_grad_two(f_vals, V, y, alpha)
    else:
        result = _gen_grad_enum(f_vals, V, y, alpha)
    z = result.next_point
    before = 0.5 * float(np.max(f_vals)) ** 2
    after = float(np.max(_models_at(f_vals, V, y, z))) + float(np.sum((z - y) ** 2)) / (
        2.0 * alpha
    )
    result.model_decrease = before - after
    return result


def _gen_grad_two(f_vals, V, y, alpha) -> StepResult:
    v1, v2 = V[0], V[1]
    h1, h2 = 0.5 * f_vals[0] ** 2, 0.5 * f_vals[1] ** 2
    z1 = y - alpha * v1
    m = _models_at(f_vals, V, y, z1)
    if m[0] >= m[1]:
        return StepResult(z1, [0], [1.0])
    z2 = y - alpha * v2
    m = _models_at(f_vals, V, y, z2)
    if m[1] >= m[0]:
        return StepResult(z2, [1], [1.0])
    diff = v1 - v2
    denom = float(diff @ diff)
    if denom == 0.0:
        # Parallel linearizations; any convex combination is optimal.
        return StepResult(z1, [0], [1.0])
    # Blend weight from the stationarity + equal-model KKT system.
    theta = ((h2 - h1) / alpha + float(diff @ v1)) / denom
    theta = min(max(theta, 0.0), 1.0)
    z = y - alpha * ((1.0 - theta) * v1 + theta * v2)
    return StepResult(z, [0, 1], [1.0 - theta, theta])


def _gen_grad_enum(f_vals, V, y, alpha, tol: float = 1e-10) -> StepResult:
    """Support enumeration through the dual simplex quadratic."""
    m = f_vals.size
    if m > 8:
        raise ValueError("general path supports m <= 8 components")
    h = 0.5 * f_vals**2
    best = None
    best_val = math.inf
    for mask in range(1, 2**m):
        J = [i for i in range(m) if mask >> i & 1]
        k = len(J)
        VJ = V[J]
        Mat = np.zeros((k + 1, k + 1))
        Mat[:k, :k] = alpha * (VJ @ VJ.T)
        Mat[:k, k] = 1.0
        Mat[k, :k] = 1.0
        rhs = np.concatenate([h[J], [1.0]])
        try:
            sol = np.linalg.solve(Mat, rhs)
        except np.linalg.LinAlgError:
            continue
        lam = sol[:k]
        nu = sol[k]
        if np.any(lam < -tol):
            continue
        z = y - alpha * (lam @ VJ)
        models = _models_at(f_vals, V, y, z)
        if np.any(models > nu + tol * max(1.0, abs(nu))):
            continue
        val = float(np.max(models)) + float(np.sum((z - y) ** 2)) / (2.0 * alpha)
        if val < best_val:
            lam_c = np.clip(lam, 0.0, None)
            lam_c /= lam_c.sum()
            best = StepResult(z, J, list(lam_c))
            best_val = val
    if best is None:
        raise RuntimeError("no valid support in prox-linear enumeration")
    return best


def level_proj_step(problem: FiniteMaxProblem, y, f_bar: float) -> StepResult:
    """Orthogonal projection onto {z : m_i(z) <= f_bar^2 / 2 for all i}."""
    if f_bar <= 0:
        raise ValueError("level target must be positive")
    y = np.asarray(y, dtype=float)
    f_vals, V = problem.component_pairs(y)
    target = 0.5 * f_bar * f_bar
    h = 0.5 * f_vals**2
    m = f_vals.size
    if np.all(h <= target):
        return StepResult(y.copy(), [], [], 0.0)
    if m == 1:
        vv = float(V[0] @ V[0])
        if vv == 0.0:
            raise EmptyLevelSetError("violated constraint with zero subgradient")
        nu = (h[0] - target) / vv
        z = y - nu * V[0]
        return StepResult(z, [0], [1.0], h[0] - target)
    if m == 2:
        result = _level_proj_two(h, V, y, target)
    else:
        result = _level_proj_enum(h, f_vals, V, y, target)
    result.model_decrease = float(np.max(h)) - target
    return result


def _single_proj(h, V, y, target, i):
    vv = float(V[i] @ V[i])
    if vv == 0.0:
        return None
    nu = (h[i] - target) / vv
    return y - nu * V[i]


def _level_proj_two(h, V, y, target) -> StepResult:
    tol = 1e-12 * max(1.0, target)
    if h[0] > target:
        z1 = _single_proj(h, V, y, target, 0)
        if z1 is not None and h[1] + float(V[1] @ (z1 - y)) <= target + tol:
            return StepResult(z1, [0], [1.0])
    if h[1] > target:
        z2 = _single_proj(h, V, y, target, 1)
        if z2 is not None and h[0] + float(V[0] @ (z2 - y)) <= target + tol:
            return StepResult(z2, [1], [1.0])
    Gram = V @ V.T
    rhs = np.array([h[0] - target, h[1] - target])
    try:
        nu = np.linalg.solve(Gram, rhs)
    except np.linalg.LinAlgError:
        # Parallel constraints: project onto the deeper-violated one.
        i = int(np.argmax(rhs))
        z = _single_proj(h, V, y, target, i)
        if z is None:
            raise EmptyLevelSetError("degenerate constraints") from None
        return StepResult(z, [i], [1.0])
    z = y - nu @ V
    return StepResult(z, [0, 1], list(nu))


def _level_proj_enum(h, f_vals, V, y, target, tol: float = 1e-10) -> StepResult:
    m = f_vals.size
    if m > 8:
        raise ValueError("general path supports m <= 8 components")
    best = None
    best_dist = math.inf
    for mask in range(1, 2**m):
        J = [i for i in range(m) if mask >> i & 1]
        VJ = V[J]
        Gram = VJ @ VJ.T
        rhs = np.array([h[i] - target for i in J])
        try:
            nu = np.linalg.solve(Gram, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.any(nu < -tol):
            continue
        z = y - nu @ VJ
        if np.any(h + V @ (z - y) > target + tol * max(1.0, target)):
            continue
        dist = float(np.linalg.norm(z - y))
        if dist < best_dist:
            best = StepResult(z, J, list(nu))
            best_dist = dist
    if best is None:
        raise EmptyLevelSetError("no feasible support in level projection")
    return best


def armijo_gen_grad(
    problem: FiniteMaxProblem,
    y,
    s_bar: float,
    tau: float = 0.5,
    c: float = 1e-4,
    max_levels: int = 60,
) -> StepResult:
    """Largest stepsize tau^i s_bar whose prox-linear step sufficiently decreases f^2/2."""
    if s_bar <= 0 or not (0.0 < tau < 1.0) or c <= 0:
        raise ValueError("invalid linesearch parameters")
    y = np.asarray(y, dtype=float)
    base = problem.half_sq(y)
    alpha = s_bar
    for _ in range(max_levels + 1):
        result = gen_grad_step(problem, y, alpha)
        z = result.next_point
        move = float(np.sum((z - y) ** 2))
        if problem.half_sq(z) <= base - c * move:
            return result
        alpha *= tau
    return StepResult(y.copy(), [], [], 0.0, stalled=True)
