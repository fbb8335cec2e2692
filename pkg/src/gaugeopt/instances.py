"""Random benchmark instance generators.

Two families: gauge feasibility over pairs of p-norm ellipsoids, and
trust-region style maximization of a concave quadratic over a p-norm
ellipsoid (solved through its radial dual).

Randomness: every instance is generated from a numpy ``PCG64`` generator
seeded through ``SeedSequence(seed)`` with one spawned child stream per
array, in a fixed documented order, so a seed fully determines the
instance across platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .finitemax import (
    FiniteMaxProblem,
    QuadraticObjective,
    feasibility_problem,
    radial_dual_problem,
    recenter,
)
from .gauge import GaugeOracle, estimate_constants_by_sampling
from .sets import PNormEllipsoid

__all__ = [
    "generalized_normal",
    "FeasibilityInstance",
    "TrustRegionInstance",
    "generate_feasibility",
    "generate_trust_region",
]

MEMBERSHIP_QUANTILE = 0.975
QUANTILE_SAMPLES = 2000
RECENTER_ITERS = 30


def generalized_normal(rng, shape: float, size) -> np.ndarray:
    """Samples with density proportional to exp(-|x|^shape).

    Uses the inverse construction X = sign * G^(1/shape) with
    G ~ Gamma(1/shape, 1); shape 2 recovers a Gaussian up to scale.
    """
    g = rng.gamma(1.0 / shape, 1.0, size=size)
    signs = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return signs * g ** (1.0 / shape)


def _interior_center(A, b, p, tau) -> np.ndarray:
    """Recentered interior point, shrunk toward the least-squares point if needed."""
    e = recenter(A, b, RECENTER_ITERS)

    def resid(x):
        return float(np.sum(np.abs(A @ x - b) ** p) ** (1.0 / p))

    if resid(e) < tau * (1.0 - 1e-9):
        return e
    deep = recenter(A, b, 200)
    t = 1.0
    for _ in range(50):
        t *= 0.5
        cand = t * e + (1.0 - t) * deep
        if resid(cand) < tau * (1.0 - 1e-9):
            return cand
    raise RuntimeError("failed to find an interior center")


@dataclass
class FeasibilityInstance:
    """Find a point in the intersection of two p-norm ellipsoids."""

    sets: list
    centers: list
    x_true: np.ndarray
    n: int
    seed: int
    p: tuple

    def oracles(self):
        return [GaugeOracle(s, e) for s, e in zip(self.sets, self.centers)]

    def problem(self) -> FiniteMaxProblem:
        return feasibility_problem(self.oracles())

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "feasibility",
                "seed": self.seed,
                "n": self.n,
                "m": len(self.sets),
                "p": list(self.p),
                "sets": [
                    {"kind": s.kind, **s.to_payload()} for s in self.sets
                ],
                "centers": [e.tolist() for e in self.centers],
                "x_true": self.x_true.tolist(),
            }
        )


def generate_feasibility(n: int, p1: float, p2: float, seed: int) -> FeasibilityInstance:
    """Random intersection-of-ellipsoids instance.

    Draws x_true and each A_i with standard normal entries, residual noise
    from the generalized normal with shape p_i, sets each threshold tau_i
    to the 0.975 Monte Carlo quantile (2000 draws) of ||eps||_{p_i}, and
    centers the gauges at 30 conjugate-gradient iterations on A_i x = b_i.
    Stream order: x_true, then per set (A_i, eps_i, quantile draws).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    root = np.random.SeedSequence(seed)
    children = root.spawn(1 + 3 * 2)
    rng_x = np.random.Generator(np.random.PCG64(children[0]))
    x_true = rng_x.standard_normal(n)
    sets_ = []
    centers = []
    for i, p in enumerate((p1, p2)):
        rng_A = np.random.Generator(np.random.PCG64(children[1 + 3 * i]))
        rng_eps = np.random.Generator(np.random.PCG64(children[2 + 3 * i]))
        rng_q = np.random.Generator(np.random.PCG64(children[3 + 3 * i]))
        A = rng_A.standard_normal((n, n))
        eps = generalized_normal(rng_eps, p, n)
        b = A @ x_true + eps
        norms = np.sum(
            np.abs(generalized_normal(rng_q, p, (QUANTILE_SAMPLES, n))) ** p, axis=1
        ) ** (1.0 / p)
        tau = float(np.quantile(norms, MEMBERSHIP_QUANTILE))
        s = PNormEllipsoid(A, b, p, tau)
        e = _interior_center(A, b, p, tau)
        sets_.append(s)
        centers.append(e)
    return FeasibilityInstance(sets_, centers, x_true, n, seed, (p1, p2))


@dataclass
class TrustRegionInstance:
    """max f(x) = 1 - x^T Q x / 2 - c^T x over {||A x - b||_p <= 1}.

    Stored in a translated frame: the gauge center sits at the origin of
    the solver's coordinates z, with x = center + z.  ``fe`` is the
    objective value at the center; the radial dual optimizes the
    normalized objective f(center + z) / fe.
    """

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    tau: float
    center: np.ndarray
    fe: float
    p: float
    seed: int

    def constraint_set(self) -> PNormEllipsoid:
        # In z coordinates the constraint is ||A z - (b - A center)||_p <= tau.
        return PNormEllipsoid(self.A, self.b - self.A @ self.center, self.p, self.tau)

    def normalized_objective(self) -> QuadraticObjective:
        return QuadraticObjective(
            self.Q / self.fe, (self.Q @ self.center + self.c) / self.fe
        )

    def radial_problem(self) -> FiniteMaxProblem:
        cached = getattr(self, "_radial_problem", None)
        if cached is None:
            oracle = GaugeOracle(self.constraint_set(), np.zeros(self.Q.shape[0]))
            cached = radial_dual_problem(
                self.normalized_objective(), oracle, seed=self.seed
            )
            object.__setattr__(self, "_radial_problem", cached)
        return cached

    def to_original(self, z) -> np.ndarray:
        return self.center + np.asarray(z, dtype=float)

    def value_to_original(self, v: float) -> float:
        return self.fe * v

    def objective_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 1.0 - 0.5 * float(x @ self.Q @ x) - float(self.c @ x)

    def estimated_constants(self, samples: int = 200) -> tuple[float, float]:
        """Sampled (L, mu) of the radial dual components, for tuned solver runs."""
        cached = getattr(self, "_estimated_constants", None)
        if cached is not None:
            return cached
        problem = self.radial_problem()
        quad_comp = problem.components[0]
        oracle = GaugeOracle(self.constraint_set(), np.zeros(self.Q.shape[0]))
        mu_g, L_g = estimate_constants_by_sampling(
            oracle, samples, np.random.default_rng(self.seed)
        )
        L = max(quad_comp.L, L_g)
        mu = min(quad_comp.mu, mu_g)
        if not math.isfinite(L):
            L = max(quad_comp.L, 1.0)
        mu = max(mu, 0.0)
        result = (L, min(mu, L))
        object.__setattr__(self, "_estimated_constants", result)
        return result

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "radial_quadratic",
                "seed": self.seed,
                "n": int(self.Q.shape[0]),
                "m": int(self.A.shape[0]),
                "p": self.p,
                "Q": self.Q.tolist(),
                "c": self.c.tolist(),
                "A": self.A.tolist(),
                "b": self.b.tolist(),
                "tau": self.tau,
                "center": self.center.tolist(),
                "fe": self.fe,
            }
        )


def generate_trust_region(n: int, m: int, p: float, seed: int) -> TrustRegionInstance:
    """Random concave-quadratic-over-ellipsoid instance.

    Q starts from a symmetrized standard normal matrix shifted to be PSD;
    c, A, x_feas, eps are standard normal; b = A x_feas + eps / m.  The
    instance is recentered so the origin of the solver frame is interior,
    and (Q, c) are rescaled when needed so the objective is positive at
    the center (radial transform admissibility).  Stream order: Q, c, A,
    x_feas, eps.
    """
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    root = np.random.SeedSequence(seed)
    ch = root.spawn(5)
    rngs = [np.random.Generator(np.random.PCG64(c)) for c in ch]
    G = rngs[0].standard_normal((n, n))
    Q = 0.5 * (G + G.T)
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    if lam_min < 0.0:
        Q = Q - lam_min * np.eye(n)
    c = rngs[1].standard_normal(n)
    A = rngs[2].standard_normal((m, n))
    x_feas = rngs[3].standard_normal(n)
    eps = rngs[4].standard_normal(m)
    b = A @ x_feas + eps / m
    tau = 1.0
    e = _interior_center(A, b, p, tau)
    t = 0.5 * float(e @ Q @ e) + float(c @ e)
    if t >= 0.5:
        # Rescale so f(e) = 1/2 > 0, keeping the maximizer unchanged.
        Q = Q / (2.0 * t)
        c = c / (2.0 * t)
        t = 0.5
    fe = 1.0 - t
    return TrustRegionInstance(Q, c, A, b, tau, e, fe, p, seed)
