"""Independent brute-force oracles.

These deliberately slow, simple routines (bisection, central differences,
Jacobi rotations, exhaustive active-set enumeration) arbitrate every closed
form in the library.  They share no code with the fast paths they validate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .sets import StructuredSet, Ball, contains, radius_bounds

__all__ = [
    "OracleReport",
    "gauge_bisection",
    "finite_diff_gradient",
    "finite_diff_hessian",
    "symmetric_eigs",
    "small_qp_enumerate",
    "containment_sample",
    "reference_solve",
    "project_ellipsoid_2norm",
]


@dataclass
class OracleReport:
    """Summary of one oracle-agreement or containment suite."""

    case_count: int = 0
    max_abs_error: float = 0.0
    max_rel_error: float = 0.0
    worst_case_input: str = ""
    violations: int = 0
    notes: list = field(default_factory=list)

    def record(self, abs_err: float, rel_err: float, case_repr: str):
        self.case_count += 1
        if rel_err > self.max_rel_error:
            self.max_rel_error = rel_err
            self.worst_case_input = case_repr
        self.max_abs_error = max(self.max_abs_error, abs_err)

    def to_json(self) -> str:
        return json.dumps(
            {
                "case_count": self.case_count,
                "max_abs_error": self.max_abs_error,
                "max_rel_error": self.max_rel_error,
                "worst_case_input": self.worst_case_input,
                "violations": self.violations,
                "notes": self.notes,
            }
        )


def gauge_bisection(s: StructuredSet, e, y, tol: float = 1e-12) -> float:
    """Gauge value by pure bisection on the membership predicate.

    Uses the sandwich ||y-e||/D <= gamma <= ||y-e||/R to bracket the root:
    membership of e + (y-e)/lam holds exactly for lam >= gamma.
    """
    e = np.asarray(e, dtype=float)
    y = np.asarray(y, dtype=float)
    d = float(np.linalg.norm(y - e))
    if d == 0.0:
        return 0.0
    R, D = radius_bounds(s, e)
    hi = d / R
    lo = 0.0 if D == math.inf else d / D

    def member(lam: float) -> bool:
        with np.errstate(over="ignore", invalid="ignore"):
            x = e + (y - e) / lam
            if not np.all(np.isfinite(x)):
                # Treat overflowed ray points as limits: fall back on a huge
                # finite surrogate; membership of such far points decides the
                # recession case.
                x = e + (y - e) * (1e150 / d)
            return contains(s, x)

    if not member(hi):
        raise RuntimeError("bisection bracket invalid: radius bound R is broken")
    if lo > 0.0 and member(lo * (1.0 - 1e-15)):
        # gamma == lo to working precision (outer bound tight).
        return lo
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if member(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    if hi <= 1e-250:
        return 0.0
    return hi


def finite_diff_gradient(fn, y, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    y = np.asarray(y, dtype=float)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(y)))
    g = np.zeros_like(y)
    for i in range(y.size):
        step = np.zeros_like(y)
        step[i] = h
        g[i] = (fn(y + step) - fn(y - step)) / (2.0 * h)
    return g


def _central_diff_hessian(fn, y, h: float) -> np.ndarray:
    n = y.size
    H = np.zeros((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        for j in range(i, n):
            ej = np.zeros(n)
            ej[j] = h
            H[i, j] = (
                fn(y + ei + ej) - fn(y + ei - ej) - fn(y - ei + ej) + fn(y - ei - ej)
            ) / (4.0 * h * h)
            H[j, i] = H[i, j]
    return H


def finite_diff_hessian(fn, y, h: float | None = None) -> np.ndarray:
    """Richardson-extrapolated central-difference Hessian, symmetrized.

    Two extrapolation levels over steps (h, h/2, h/4) cancel the h^2 and
    h^4 truncation terms; pass a smaller ``h`` near badly conditioned
    points rather than relying on the default scale.
    """
    y = np.asarray(y, dtype=float)
    if h is None:
        h = 2e-4 * max(1.0, float(np.linalg.norm(y)))
    F1 = _central_diff_hessian(fn, y, h)
    F2 = _central_diff_hessian(fn, y, h / 2.0)
    F4 = _central_diff_hessian(fn, y, h / 4.0)
    R1 = (4.0 * F2 - F1) / 3.0
    R2 = (4.0 * F4 - F2) / 3.0
    H = (16.0 * R2 - R1) / 15.0
    return 0.5 * (H + H.T)


def symmetric_eigs(Mtx) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(Mtx, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(A, A.T, atol=1e-10 * max(1.0, float(np.abs(A).max()))):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    norm = float(np.linalg.norm(A))
    if norm == 0.0:
        return np.zeros(n)
    for _sweep in range(100):
        off = math.sqrt(max(float(np.sum(A * A)) - float(np.sum(np.diag(A) ** 2)), 0.0))
        if off <= 1e-14 * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * norm:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def _model_values(f_vals, V, y, z):
    """Linearized models m_i(z) = f_i^2/2 + (f_i g_i)^T (z - y)."""
    return 0.5 * f_vals**2 + V @ (z - y)


def small_qp_enumerate(kind, f_vals, subgrads, y, alpha_or_fbar, tol: float = 1e-10):
    """Exact solution of the prox-linear or level-projection subproblem.

    Enumerates every candidate active support (2^m - 1 systems plus, for
    projections, the empty support), solves its equality-constrained KKT
    system directly, filters by primal/dual feasibility, and returns the
    feasible optimum.

    Parameters are the component values f_i(y), component subgradients g_i
    (rows of ``subgrads``), the current point, and the prox parameter alpha
    (``kind="prox_linear"``) or level target f-bar (``kind="level_projection"``).
    """
    f_vals = np.asarray(f_vals, dtype=float)
    G = np.asarray(subgrads, dtype=float)
    y = np.asarray(y, dtype=float)
    m = f_vals.size
    if m > 8:
        raise ValueError("enumeration oracle limited to m <= 8")
    V = f_vals[:, None] * G  # rows are f_i g_i, the subgradients of f_i^2/2

    if kind == "prox_linear":
        alpha = float(alpha_or_fbar)
        best, best_val = None, math.inf
        for mask in range(1, 2**m):
            J = [i for i in range(m) if mask >> i & 1]
            k = len(J)
            # Unknowns: lam_J and the common model value nu.
            # Stationarity: z = y - alpha * sum lam_i v_i;
            # equal models on J: m_i(z) = nu; weights sum to one.
            Mat = np.zeros((k + 1, k + 1))
            rhs = np.zeros(k + 1)
            for r, i in enumerate(J):
                for cidx, j in enumerate(J):
                    Mat[r, cidx] = alpha * float(V[i] @ V[j])
                Mat[r, k] = 1.0
                rhs[r] = 0.5 * f_vals[i] ** 2
            Mat[k, :k] = 1.0
            rhs[k] = 1.0
            try:
                sol = np.linalg.solve(Mat, rhs)
            except np.linalg.LinAlgError:
                continue
            lam = sol[:k]
            nu = sol[k]
            if np.any(lam < -tol):
                continue
            z = y - alpha * (lam @ V[J])
            models = _model_values(f_vals, V, y, z)
            if np.any(models > nu + tol * max(1.0, abs(nu))):
                continue
            val = float(np.max(models)) + float(np.sum((z - y) ** 2)) / (2.0 * alpha)
            if val < best_val:
                best_val, best = val, z
        if best is None:
            raise RuntimeError("no feasible KKT support found")
        return best

    if kind == "level_projection":
        target = 0.5 * float(alpha_or_fbar) ** 2
        models_y = _model_values(f_vals, V, y, y)
        if np.all(models_y <= target + tol):
            return y.copy()
        best, best_dist = None, math.inf
        for mask in range(1, 2**m):
            J = [i for i in range(m) if mask >> i & 1]
            k = len(J)
            VJ = V[J]
            Gram = VJ @ VJ.T
            rhs = np.array([models_y[i] - target for i in J])
            try:
                nu = np.linalg.solve(Gram, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(nu < -tol):
                continue
            z = y - nu @ VJ
            models = _model_values(f_vals, V, y, z)
            if np.any(models > target + tol * max(1.0, target)):
                continue
            dist = float(np.linalg.norm(z - y))
            if dist < best_dist:
                best_dist, best = dist, z
        if best is None:
            raise RuntimeError("linearized level set is empty")
        return best

    raise ValueError(f"unknown subproblem kind: {kind}")


def containment_sample(
    certificate_ball: Ball,
    s: StructuredSet,
    near,
    radius: float,
    count: int,
    rng=None,
    mode: str = "outer",
    tol: float = 1e-8,
) -> OracleReport:
    """Sample-based check of a local ball certificate.

    mode="outer": members of the set within ``radius`` of ``near`` must lie
    inside the certificate ball.  mode="inner": certificate-ball points
    within ``radius`` of ``near`` must be members of the set.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    near = np.asarray(near, dtype=float)
    n = near.size
    report = OracleReport()
    checked = 0
    attempts = 0
    while checked < count and attempts < 200 * count:
        attempts += 1
        u = rng.standard_normal(n)
        u *= radius * rng.random() ** (1.0 / n) / np.linalg.norm(u)
        x = near + u
        if mode == "outer":
            if not contains(s, x):
                continue
            checked += 1
            excess = float(np.linalg.norm(x - certificate_ball.c)) - certificate_ball.r
            report.record(max(excess, 0.0), max(excess, 0.0) / certificate_ball.r, repr(x))
            if excess > tol:
                report.violations += 1
        elif mode == "inner":
            # Pull the sample onto the certificate ball's inside.
            v = x - certificate_ball.c
            nv = float(np.linalg.norm(v))
            if nv > certificate_ball.r:
                x = certificate_ball.c + v * (certificate_ball.r / nv) * (1.0 - 1e-12)
            if float(np.linalg.norm(x - near)) > radius:
                continue
            checked += 1
            ok = contains(s, x)
            report.record(0.0 if ok else 1.0, 0.0 if ok else 1.0, repr(x))
            if not ok:
                report.violations += 1
        else:
            raise ValueError("mode must be 'outer' or 'inner'")
    report.case_count = checked
    return report


def project_ellipsoid_2norm(A, b, tau, x0, eig=None, tol: float = 1e-13):
    """Exact euclidean projection of x0 onto {x : ||A x - b||_2 <= tau}.

    Solves the single-constraint Lagrangian x(nu) = (I + nu A^T A)^{-1}
    (x0 + nu A^T b) for the multiplier nu >= 0 by a safeguarded scalar
    Newton iteration on phi(nu) = ||A x(nu) - b|| - tau.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    r0 = A @ x0 - b
    if float(np.linalg.norm(r0)) <= tau:
        return x0.copy()
    if eig is None:
        eig = np.linalg.eigh(A.T @ A)
    lam, U = eig
    Atb = A.T @ b
    z0 = U.T @ x0
    zb = U.T @ Atb

    def x_of(nu):
        return U @ ((z0 + nu * zb) / (1.0 + nu * lam))

    def phi(nu):
        return float(np.linalg.norm(A @ x_of(nu) - b)) - tau

    nu_lo, nu_hi = 0.0, 1.0
    while phi(nu_hi) > 0.0:
        nu_lo = nu_hi
        nu_hi *= 4.0
        if nu_hi > 1e18:
            raise RuntimeError("projection multiplier search failed")
    nu = 0.5 * (nu_lo + nu_hi)
    for _ in range(200):
        val = phi(nu)
        if val > 0.0:
            nu_lo = nu
        else:
            nu_hi = nu
        h = 1e-7 * max(1.0, nu)
        deriv = (phi(nu + h) - phi(nu - h)) / (2.0 * h)
        if deriv != 0.0:
            nu_new = nu - val / deriv
        else:
            nu_new = 0.5 * (nu_lo + nu_hi)
        if not (nu_lo < nu_new < nu_hi):
            nu_new = 0.5 * (nu_lo + nu_hi)
        if abs(nu_new - nu) <= tol * max(1.0, nu):
            nu = nu_new
            break
        nu = nu_new
    return x_of(nu)


def reference_solve(problem_kind: str, instance, iterations: int = 20000):
    """High-accuracy reference solutions replacing external solvers.

    * ``trust_region_p2``: accelerated projected gradient with exact
      ellipsoid projection; returns the maximizer and objective value of
      f(x) = 1 - x^T Q x / 2 - c^T x over {||A x - b||_2 <= tau}.
    * ``trust_region_radial``: long-horizon accelerated run on the radial
      dual (any p); returns the recovered primal point and value.
    * ``feasibility``: long-horizon accelerated run on the gauge max;
      returns the best iterate and best objective value (reference p*).
    """
    if problem_kind == "trust_region_p2":
        Q = np.asarray(instance.Q, dtype=float)
        c = np.asarray(instance.c, dtype=float)
        A = np.asarray(instance.A, dtype=float)
        b = np.asarray(instance.b, dtype=float)
        tau = float(instance.tau)
        n = Q.shape[0]
        eig = np.linalg.eigh(A.T @ A)
        Lq = max(float(np.linalg.eigvalsh(Q)[-1]), 1e-12)
        # Minimize -f(x) = Q-quadratic via FISTA with exact projection.
        x = project_ellipsoid_2norm(A, b, tau, np.zeros(n), eig)
        z = x.copy()
        t = 1.0
        for _ in range(iterations):
            grad = Q @ z + c
            x_new = project_ellipsoid_2norm(A, b, tau, z - grad / Lq, eig)
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            if float(np.linalg.norm(x_new - x)) <= 1e-14 * max(1.0, float(np.linalg.norm(x))):
                x = x_new
                break
            x, t = x_new, t_new
        value = 1.0 - 0.5 * float(x @ Q @ x) - float(c @ x)
        return x, value

    if problem_kind == "trust_region_radial":
        from . import solvers

        problem = instance.radial_problem()
        from .finitemax import recover_primal

        L, mu = instance.estimated_constants()
        if mu < 1e-9 * L:
            mu = 0.0
        trace = solvers.run_accelerated(
            problem,
            np.zeros(instance.Q.shape[0]),
            L=L / 5.0,
            mu=mu * 5.0,
            T=iterations,
        )
        if trace.diverged:
            trace = solvers.run_accelerated(
                problem, np.zeros(instance.Q.shape[0]), L=L, mu=mu, T=iterations
            )
        y = trace.best_point
        value = trace.best_objective
        for _ in range(10):
            polish = solvers.run_level(problem, y, value * (1.0 - 1e-5), 300)
            if polish.infeasible_target or polish.best_objective >= value:
                break
            value = polish.best_objective
            y = polish.best_point
        x, value = recover_primal(problem, y)
        return instance.to_original(x), instance.value_to_original(value)

    if problem_kind == "feasibility":
        from . import solvers

        problem, y0 = instance
        L, mu = problem.L, problem.mu
        # Conservative worst-case constants stall the reference run, so
        # tighten them by sampling each component's oracle when available.
        oracles = [getattr(c, "oracle", None) for c in problem.components]
        if all(o is not None for o in oracles):
            from .gauge import estimate_constants_by_sampling

            rng = np.random.default_rng(0)
            mus, Ls = [], []
            for oracle in oracles:
                mu_i, L_i = estimate_constants_by_sampling(oracle, 400, rng)
                mus.append(mu_i)
                Ls.append(L_i)
            mu = min(mus)
            L = max(Ls)
        # A negligible mu estimate only poisons the momentum start t0 =
        # sqrt(mu/L); treat it as zero.
        if mu < 1e-9 * L:
            mu = 0.0
        # Sampled constants are conservative; a moderately aggressive
        # rescale converges much faster.  Fall back when it destabilizes.
        # Well-conditioned problems leave no slack, so cap the rescale.
        trace = solvers.run_accelerated(
            problem, y0, L=L / 5.0, mu=min(mu * 5.0, L / 5.0), T=iterations
        )
        if trace.diverged:
            trace = solvers.run_accelerated(problem, y0, L=L, mu=mu, T=iterations)
        best_point = trace.best_point
        best_value = trace.best_objective
        # Polish with level runs at slightly shrunken targets; each pass
        # converges fast near the optimum and stops once the target is
        # unreachable.
        for _ in range(10):
            target = best_value * (1.0 - 1e-4)
            if target <= 0:
                break
            polish = solvers.run_level(problem, best_point, target, 300)
            if polish.infeasible_target or polish.best_objective >= best_value:
                break
            best_value = polish.best_objective
            best_point = polish.best_point
        return best_point, best_value

    raise ValueError(f"unknown problem kind: {problem_kind}")
