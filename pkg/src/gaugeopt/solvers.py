"""Iterative methods on finite-max objectives with per-iteration traces.

Four methods: the subgradient method on f^2/2, the generalized (prox
linear) gradient method, its accelerated variant with the coupled
momentum recursion, and the level-set projection method.  Each emits a
Trace that serializes to the benchmark CSV format.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .finitemax import FiniteMaxProblem
from .steps import EmptyLevelSetError, gen_grad_step, level_proj_step, subgrad_step

__all__ = [
    "Constant",
    "InverseSqrt",
    "Inverse",
    "TheoremSubgrad",
    "TheoremSC",
    "InverseL",
    "Trace",
    "run_subgradient",
    "run_gen_gradient",
    "run_accelerated",
    "run_level",
    "gap_report",
]

DIVERGENCE_FACTOR = 1e6

TRACE_HEADER = "iter,time_s,objective,half_sq_objective,best_so_far,feasible"


@dataclass
class Constant:
    eta: float

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        return self.eta


@dataclass
class InverseSqrt:
    eta: float

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        return self.eta / math.sqrt(k + 10.0)


@dataclass
class Inverse:
    eta: float

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        return self.eta / (k + 10.0)


@dataclass
class TheoremSubgrad:
    """D / (||f(y_k) g_k|| sqrt(T+1)): the generic-rate schedule."""

    D: float
    T: int

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        norm = max(subgrad_norm if subgrad_norm else 0.0, 1e-300)
        return self.D / (norm * math.sqrt(self.T + 1.0))

    needs_subgrad_norm = True


@dataclass
class TheoremSC:
    """2 / (mu (k+2) + M^4 / (mu (k+1))): the strongly convex schedule."""

    mu: float
    M: float

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        return 2.0 / (self.mu * (k + 2.0) + self.M**4 / (self.mu * (k + 1.0)))


@dataclass
class InverseL:
    L: float

    def stepsize(self, k: int, subgrad_norm: float | None = None) -> float:
        return 1.0 / self.L


@dataclass
class Trace:
    """Per-iteration solver record."""

    rows: list = field(default_factory=list)
    points: list = field(default_factory=list)
    diverged: bool = False
    infeasible_target: bool = False
    best_point: np.ndarray | None = None
    best_objective: float = math.inf
    last_point: np.ndarray | None = None

    def record(self, k: int, elapsed: float, objective: float, y: np.ndarray):
        self.last_point = np.array(y)
        if objective < self.best_objective:
            self.best_objective = objective
            self.best_point = np.array(y)
        self.rows.append(
            (
                k,
                elapsed,
                objective,
                0.5 * objective * objective,
                self.best_objective,
                objective <= 1.0,
            )
        )

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(TRACE_HEADER + "\n")
            for k, t, obj, half, best, feas in self.rows:
                fh.write(
                    f"{k},{t!r},{obj!r},{half!r},{best!r},{str(bool(feas)).lower()}\n"
                )


def _diverged(objective: float, initial: float) -> bool:
    return not math.isfinite(objective) or objective > DIVERGENCE_FACTOR * max(1.0, initial)


def run_subgradient(problem: FiniteMaxProblem, y0, schedule, T: int) -> Trace:
    """Iterate the subgradient step on f^2/2 for T iterations."""
    if T < 1:
        raise ValueError("T must be >= 1")
    y = np.asarray(y0, dtype=float).copy()
    trace = Trace()
    start = time.perf_counter()
    f0 = problem.objective(y)
    trace.record(0, 0.0, f0, y)
    for k in range(T):
        norm = None
        if getattr(schedule, "needs_subgrad_norm", False):
            f_vals, V = problem.component_pairs(y)
            i = int(np.argmax(f_vals))
            norm = float(np.linalg.norm(V[i]))
        alpha = schedule.stepsize(k, norm)
        y = subgrad_step(problem, y, alpha).next_point
        obj = problem.objective(y)
        if _diverged(obj, f0):
            trace.diverged = True
            trace.record(k + 1, time.perf_counter() - start, obj, y)
            break
        trace.record(k + 1, time.perf_counter() - start, obj, y)
    return trace


def run_gen_gradient(problem: FiniteMaxProblem, y0, schedule, T: int) -> Trace:
    """Iterate the generalized (prox-linear) gradient step for T iterations."""
    if T < 1:
        raise ValueError("T must be >= 1")
    y = np.asarray(y0, dtype=float).copy()
    trace = Trace()
    start = time.perf_counter()
    f0 = problem.objective(y)
    trace.record(0, 0.0, f0, y)
    for k in range(T):
        norm = None
        if getattr(schedule, "needs_subgrad_norm", False):
            f_vals, V = problem.component_pairs(y)
            i = int(np.argmax(f_vals))
            norm = float(np.linalg.norm(V[i]))
        alpha = schedule.stepsize(k, norm)
        y = gen_grad_step(problem, y, alpha).next_point
        obj = problem.objective(y)
        if _diverged(obj, f0):
            trace.diverged = True
            trace.record(k + 1, time.perf_counter() - start, obj, y)
            break
        trace.record(k + 1, time.perf_counter() - start, obj, y)
    return trace


def _next_t(t: float, mu_over_L: float) -> float:
    """Positive root of t'^2 - (mu/L) t' - (1 - t) t^2 = 0."""
    b = mu_over_L
    c = (1.0 - t) * t * t
    root = 0.5 * (b + math.sqrt(b * b + 4.0 * c))
    return min(max(root, 1e-12), 1.0)


def run_accelerated(
    problem: FiniteMaxProblem,
    y0,
    L: float,
    mu: float = 0.0,
    t0: float | None = None,
    T: int = 100,
    restart_every: int | None = None,
) -> Trace:
    """Accelerated generalized gradient method with momentum recursion.

    x_{k+1} = gen_grad_step(y_k, 1/L); t_{k+1} solves
    t^2 = (1 - t_k) t_k^2 + (mu/L) t; beta_k = t_k (1 - t_k) /
    (t_k^2 + t_{k+1}); y_{k+1} = x_{k+1} + beta_k (x_{k+1} - x_k).
    The trace records f at the x iterates.

    When restart_every is set, every that many iterations the momentum
    state is reset and the method continues from its best iterate so
    far, which smooths out the oscillations of the plain recursion.
    """
    if restart_every is not None and restart_every < 1:
        raise ValueError("restart_every must be a positive integer")
    if not (L > 0.0) or not math.isfinite(L):
        raise ValueError("L must be positive and finite")
    if not (0.0 <= mu <= L):
        raise ValueError("mu must lie in [0, L]")
    if t0 is None:
        # Fixed point of the recursion when mu > 0; golden-ratio start
        # (which makes the initial certificate constant equal L) otherwise.
        t0 = math.sqrt(mu / L) if mu > 0 else (math.sqrt(5.0) - 1.0) / 2.0
    if not (0.0 < t0 < 1.0):
        t0 = min(max(t0, 1e-12), 1.0 - 1e-12)
    x = np.asarray(y0, dtype=float).copy()
    y = x.copy()
    t = t0
    trace = Trace()
    start = time.perf_counter()
    f0 = problem.objective(x)
    trace.record(0, 0.0, f0, x)
    for k in range(T):
        x_new = gen_grad_step(problem, y, 1.0 / L).next_point
        t_new = _next_t(t, mu / L)
        beta = t * (1.0 - t) / (t * t + t_new)
        y = x_new + beta * (x_new - x)
        x, t = x_new, t_new
        obj = problem.objective(x)
        if _diverged(obj, f0):
            trace.diverged = True
            trace.record(k + 1, time.perf_counter() - start, obj, x)
            break
        trace.record(k + 1, time.perf_counter() - start, obj, x)
        if restart_every is not None and (k + 1) % restart_every == 0:
            x = trace.best_point.copy()
            y = x.copy()
            t = t0
    return trace


def run_level(problem: FiniteMaxProblem, y0, f_bar: float, T: int) -> Trace:
    """Level-set projection method with target value f_bar."""
    if f_bar <= 0:
        raise ValueError("f_bar must be positive")
    y = np.asarray(y0, dtype=float).copy()
    trace = Trace()
    start = time.perf_counter()
    f0 = problem.objective(y)
    trace.record(0, 0.0, f0, y)
    for k in range(T):
        try:
            y = level_proj_step(problem, y, f_bar).next_point
        except EmptyLevelSetError:
            trace.infeasible_target = True
            break
        obj = problem.objective(y)
        if _diverged(obj, f0):
            trace.diverged = True
            trace.record(k + 1, time.perf_counter() - start, obj, y)
            break
        trace.record(k + 1, time.perf_counter() - start, obj, y)
    return trace


def gap_report(trace: Trace, p_star: float):
    """Rows (k, min-gap so far, squared-gap conversion bound)."""
    if p_star <= 0:
        raise ValueError("p_star must be positive")
    out = []
    best = math.inf
    for row in trace.rows:
        k, _, obj = row[0], row[1], row[2]
        best = min(best, obj)
        sq_bound = (0.5 * obj * obj - 0.5 * p_star * p_star) / p_star
        out.append((k, best - p_star, sq_bound))
    return out
