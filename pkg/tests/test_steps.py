import numpy as np
import pytest

from gaugeopt.finitemax import FiniteMaxProblem
from gaugeopt.steps import armijo_gen_grad, gen_grad_step, level_proj_step, subgrad_step
from gaugeopt.verify import small_qp_enumerate


class _NormComponent:
    """f(y) = ||y - shift||, a model 1-Lipschitz component."""

    def __init__(self, shift):
        self.shift = np.asarray(shift, dtype=float)
        self.M = 1.0
        self.mu = 0.0
        self.L = 1.0

    def eval(self, y):
        return float(np.linalg.norm(y - self.shift))

    def half_sq_subgrad(self, y):
        d = y - self.shift
        n = np.linalg.norm(d)
        if n == 0.0:
            return np.zeros_like(d)
        return d  # f * (d / ||d||)

    def eval_pair(self, y):
        return self.eval(y), self.half_sq_subgrad(y)


class _AffinePositive:
    """f(y) = max(a.y + b, 0) with a generic slope."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        self.M = float(np.linalg.norm(self.a))
        self.mu = 0.0
        self.L = float(self.a @ self.a)

    def eval(self, y):
        return max(float(self.a @ y + self.b), 0.0)

    def half_sq_subgrad(self, y):
        return self.eval(y) * self.a

    def eval_pair(self, y):
        return self.eval(y), self.half_sq_subgrad(y)


def _norm_problem(*shifts):
    return FiniteMaxProblem([_NormComponent(s) for s in shifts])


def test_subgrad_step_norm_example():
    prob = _norm_problem(np.zeros(2))
    res = subgrad_step(prob, np.array([2.0, 0.0]), 0.5)
    np.testing.assert_allclose(res.next_point, [1.0, 0.0], atol=1e-12)
    assert res.active_components == [0]


def test_subgrad_step_zero_alpha():
    prob = _norm_problem(np.zeros(2))
    y = np.array([2.0, 1.0])
    res = subgrad_step(prob, y, 0.0)
    np.testing.assert_allclose(res.next_point, y, atol=1e-15)


def test_subgrad_step_strict_max_matches_single_component():
    prob2 = _norm_problem(np.array([0.0, 0.0]), np.array([3.0, 0.0]))
    prob1 = _norm_problem(np.array([0.0, 0.0]))
    y = np.array([2.5, 0.0])
    r2 = subgrad_step(prob2, y, 0.3)
    r1 = subgrad_step(prob1, y, 0.3)
    np.testing.assert_allclose(r2.next_point, r1.next_point, atol=1e-12)


def test_gen_grad_step_m1_is_subgradient_step():
    prob = _norm_problem(np.zeros(2))
    res = gen_grad_step(prob, np.array([2.0, 0.0]), 0.5)
    np.testing.assert_allclose(res.next_point, [1.0, 0.0], atol=1e-12)


def test_gen_grad_step_m2_symmetric():
    prob = _norm_problem(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    res = gen_grad_step(prob, np.array([0.0, 1.0]), 1.0)
    assert abs(res.next_point[0]) <= 1e-10


def test_level_proj_step_polyak_example():
    prob = _norm_problem(np.zeros(2))
    res = level_proj_step(prob, np.array([2.0, 0.0]), 1.0)
    np.testing.assert_allclose(res.next_point, [1.25, 0.0], atol=1e-12)


def test_level_proj_step_inside_level_set():
    prob = _norm_problem(np.zeros(2))
    y = np.array([0.5, 0.0])
    res = level_proj_step(prob, y, 1.0)
    np.testing.assert_allclose(res.next_point, y, atol=1e-15)


def _random_two_component_problem(rng, n=3):
    kind = rng.integers(0, 2)
    comps = []
    for _ in range(2):
        if kind == 0:
            comps.append(_NormComponent(rng.standard_normal(n)))
        else:
            comps.append(_AffinePositive(rng.standard_normal(n), rng.uniform(0.5, 2.0)))
    return FiniteMaxProblem(comps)


def test_gen_grad_step_m2_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(300):
        prob = _random_two_component_problem(rng)
        y = rng.standard_normal(3)
        alpha = rng.uniform(0.1, 2.0)
        res = gen_grad_step(prob, y, alpha)
        f_vals = [c.eval(y) for c in prob.components]
        if min(f_vals) < 1e-9:
            continue
        grads = [c.half_sq_subgrad(y) / f for c, f in zip(prob.components, f_vals)]
        ref = small_qp_enumerate("prox_linear", f_vals, grads, y, alpha)
        np.testing.assert_allclose(res.next_point, ref, atol=1e-8)
        lam = np.asarray(res.multipliers)
        assert np.all(lam >= -1e-10)
        assert lam.sum() == pytest.approx(1.0, abs=1e-10)


def test_level_proj_step_m2_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(300):
        prob = _random_two_component_problem(rng)
        y = rng.standard_normal(3) * 2.0
        f_bar = rng.uniform(0.3, 1.5)
        f_vals = [c.eval(y) for c in prob.components]
        if min(f_vals) < 1e-9:
            continue
        grads = [c.half_sq_subgrad(y) / f for c, f in zip(prob.components, f_vals)]
        try:
            ref = small_qp_enumerate("level_projection", f_vals, grads, y, f_bar)
        except RuntimeError:
            continue
        res = level_proj_step(prob, y, f_bar)
        np.testing.assert_allclose(res.next_point, ref, atol=1e-8)


def test_level_proj_step_normality():
    rng = np.random.default_rng(2)
    for _ in range(50):
        prob = _random_two_component_problem(rng)
        y = rng.standard_normal(3) * 2.0
        f_bar = 1.0
        f_vals = [c.eval(y) for c in prob.components]
        grads = [c.half_sq_subgrad(y) for c in prob.components]
        res = level_proj_step(prob, y, f_bar)
        p = res.next_point
        # projection characterization against sampled level-set members
        for _ in range(50):
            z = p + rng.standard_normal(3)
            ok = all(
                0.5 * f_vals[i] ** 2 + grads[i] @ (z - y) <= 0.5 * f_bar ** 2 + 1e-12
                for i in range(2)
            )
            if ok:
                assert (y - p) @ (z - p) <= 1e-8


def test_gen_grad_step_kkt_residual():
    rng = np.random.default_rng(3)
    for _ in range(100):
        prob = _random_two_component_problem(rng)
        y = rng.standard_normal(3)
        alpha = rng.uniform(0.1, 2.0)
        res = gen_grad_step(prob, y, alpha)
        g = np.zeros(3)
        for idx, lam in zip(res.active_components, res.multipliers):
            g += lam * prob.components[idx].half_sq_subgrad(y)
        resid = g + (res.next_point - y) / alpha
        assert np.linalg.norm(resid) <= 1e-8


def test_armijo_accepts_full_step_on_smooth_problem():
    a = np.array([1.0, 0.5])
    prob = FiniteMaxProblem([_AffinePositive(a, 1.0)])
    L = float(a @ a)
    y = np.array([1.0, 1.0])
    res = armijo_gen_grad(prob, y, 1.0 / L, tau=0.5, c=L / 4.0)
    full = gen_grad_step(prob, y, 1.0 / L)
    np.testing.assert_allclose(res.next_point, full.next_point, atol=1e-12)
    assert not res.stalled


def test_armijo_at_minimizer_returns_point():
    prob = _norm_problem(np.zeros(2))
    res = armijo_gen_grad(prob, np.zeros(2), 1.0)
    np.testing.assert_allclose(res.next_point, np.zeros(2), atol=1e-12)
    assert res.model_decrease == pytest.approx(0.0, abs=1e-12)


def test_armijo_huge_scale_satisfies_inequality():
    a = np.array([1.0, -0.5])
    prob = FiniteMaxProblem([_AffinePositive(a, 1.0)])
    L = float(a @ a)
    y = np.array([2.0, 0.0])
    c = 1e-4
    res = armijo_gen_grad(prob, y, 1e6 / L, tau=0.5, c=c)
    assert not res.stalled
    f0 = prob.objective(y)
    f1 = prob.objective(res.next_point)
    d = res.next_point - y
    assert 0.5 * f1 ** 2 <= 0.5 * f0 ** 2 - c * (d @ d) + 1e-10
