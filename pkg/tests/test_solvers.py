import numpy as np
import pytest

from gaugeopt.finitemax import FiniteMaxProblem, GaugeOracle, feasibility_problem
from gaugeopt.sets import Ball
from gaugeopt.solvers import (
    Constant,
    Inverse,
    InverseL,
    InverseSqrt,
    TRACE_HEADER,
    TheoremSC,
    TheoremSubgrad,
    gap_report,
    run_accelerated,
    run_gen_gradient,
    run_level,
    run_subgradient,
)


class _NormComponent:
    """f(y) = ||y||, with exact metadata M = mu = L = 1 for the square."""

    def __init__(self, n):
        self.n = n
        self.M = 1.0
        self.mu = 1.0
        self.L = 1.0

    def eval(self, y):
        return float(np.linalg.norm(y))

    def half_sq_subgrad(self, y):
        return np.asarray(y, dtype=float)

    def eval_pair(self, y):
        return self.eval(y), self.half_sq_subgrad(y)


def _norm_problem(n=2):
    return FiniteMaxProblem([_NormComponent(n)])


def test_subgradient_polyak_like_exact_step():
    tr = run_subgradient(_norm_problem(), np.array([1.0, 0.0]), Constant(1.0), 1)
    assert tr.rows[-1][2] == pytest.approx(0.0, abs=1e-15)


def test_subgradient_touching_balls_objective_to_one():
    o1 = GaugeOracle(Ball(np.array([1.0, 0.0]), 1.0), np.array([1.0, 0.0]))
    o2 = GaugeOracle(Ball(np.array([-1.0, 0.0]), 1.0), np.array([-1.0, 0.0]))
    prob = feasibility_problem([o1, o2])
    tr = run_subgradient(prob, np.array([0.5, 0.5]), InverseSqrt(0.5), 2000)
    assert tr.rows[-1][4] == pytest.approx(1.0, abs=1e-2)


def test_schedules_positive():
    for sched in (
        Constant(0.3),
        InverseSqrt(1.0),
        Inverse(1.0),
        TheoremSubgrad(2.0, 100),
        TheoremSC(0.5, 1.0),
        InverseL(2.0),
    ):
        for k in range(0, 200, 7):
            assert sched.stepsize(k, 1.0) > 0.0


def test_gen_gradient_one_step_on_quadratic():
    tr = run_gen_gradient(_norm_problem(), np.array([3.0, -2.0]), InverseL(1.0), 1)
    assert tr.rows[-1][2] == pytest.approx(0.0, abs=1e-12)


def test_gen_gradient_descent_property():
    o1 = GaugeOracle(Ball(np.array([0.4, 0.0]), 1.0), np.array([0.4, 0.0]))
    o2 = GaugeOracle(Ball(np.array([-0.4, 0.0]), 1.0), np.array([-0.4, 0.0]))
    prob = feasibility_problem([o1, o2])
    tr = run_gen_gradient(prob, np.array([2.0, 1.5]), InverseL(prob.L), 300)
    halves = [r[3] for r in tr.rows]
    for a, b in zip(halves, halves[1:]):
        assert b <= a + 1e-12


def test_accelerated_perfect_conditioning_matches_gradient():
    y0 = np.array([3.0, -2.0])
    tr_acc = run_accelerated(_norm_problem(), y0, L=1.0, mu=1.0, T=5)
    tr_grad = run_gen_gradient(_norm_problem(), y0, InverseL(1.0), 5)
    np.testing.assert_allclose(tr_acc.objectives, tr_grad.objectives, atol=1e-12)


def test_accelerated_linear_convergence_on_ball_pair():
    o1 = GaugeOracle(Ball(np.array([0.3, 0.0]), 1.0), np.array([0.3, 0.0]))
    o2 = GaugeOracle(Ball(np.array([-0.3, 0.0]), 1.0), np.array([-0.3, 0.0]))
    prob = feasibility_problem([o1, o2])
    tr = run_accelerated(prob, np.array([1.5, 1.0]), L=prob.L, mu=prob.mu, T=400)
    # strongly convex squared objective: the gap to the best value decays fast
    assert tr.rows[-1][4] <= 1.0 + 1e-9


def test_accelerated_restart_parameter_validated():
    with pytest.raises(ValueError):
        run_accelerated(_norm_problem(), np.array([1.0, 0.0]), L=1.0, restart_every=0)


def test_level_polyak_recursion():
    tr = run_level(_norm_problem(), np.array([2.0, 0.0]), 1.0, 20)
    x = 2.0
    for r in tr.rows[1:]:
        x = x - (x * x - 1.0) / (2.0 * x)
        assert r[2] == pytest.approx(x, abs=1e-12)


def test_level_feasible_start_constant_trace():
    y0 = np.array([0.5, 0.0])
    tr = run_level(_norm_problem(), y0, 1.0, 10)
    for r in tr.rows:
        assert r[2] == pytest.approx(0.5, abs=1e-15)


def test_divergence_guard():
    tr = run_subgradient(_norm_problem(), np.array([1.0, 0.0]), Constant(100.0), 5000)
    assert tr.diverged
    assert len(tr.rows) < 5001


def test_trace_invariants():
    tr = run_subgradient(_norm_problem(), np.array([2.0, 1.0]), InverseSqrt(1.0), 50)
    ks = [r[0] for r in tr.rows]
    assert ks == list(range(len(ks))) and ks[0] == 0
    bests = [r[4] for r in tr.rows]
    for a, b in zip(bests, bests[1:]):
        assert b <= a + 1e-15
    for r in tr.rows:
        assert r[3] == pytest.approx(0.5 * r[2] ** 2, rel=1e-15)
        assert r[5] == (r[2] <= 1.0)


def test_trace_csv_format(tmp_path):
    tr = run_subgradient(_norm_problem(), np.array([2.0, 1.0]), Constant(0.1), 5)
    out = tmp_path / "trace.csv"
    tr.to_csv(out)
    lines = out.read_text().split("\n")
    assert lines[0] == "iter,time_s,objective,half_sq_objective,best_so_far,feasible"
    assert lines[0] == TRACE_HEADER
    assert len(lines) == 8  # header + 6 rows + trailing newline
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[2]) == pytest.approx(np.sqrt(5.0))
    assert first[5] in ("true", "false")


def test_determinism_modulo_time():
    y0 = np.array([1.0, 2.0])
    a = run_subgradient(_norm_problem(), y0, InverseSqrt(1.0), 100)
    b = run_subgradient(_norm_problem(), y0, InverseSqrt(1.0), 100)
    for ra, rb in zip(a.rows, b.rows):
        assert ra[0] == rb[0]
        assert ra[2] == rb[2] and ra[3] == rb[3] and ra[4] == rb[4]


def test_gap_report_constant_trace_zero():
    tr = run_level(_norm_problem(), np.array([1.0, 0.0]), 1.0, 10)
    rep = gap_report(tr, 1.0)
    for _, gap, _bound in rep:
        assert gap == pytest.approx(0.0, abs=1e-12)


def test_gap_report_nonincreasing():
    tr = run_subgradient(_norm_problem(), np.array([2.0, 1.0]), InverseSqrt(1.0), 200)
    gaps = [g for _, g, _ in gap_report(tr, 1e-12)]
    for a, b in zip(gaps, gaps[1:]):
        assert b <= a + 1e-15


def test_subgradient_theorem_schedule_bound():
    # touching-ball feasibility has known p* = 1 > 0, as the bound requires
    o1 = GaugeOracle(Ball(np.array([1.0, 0.0]), 1.0), np.array([1.0, 0.0]))
    o2 = GaugeOracle(Ball(np.array([-1.0, 0.0]), 1.0), np.array([-1.0, 0.0]))
    prob = feasibility_problem([o1, o2])
    p_star = 1.0
    y0 = np.array([0.5, 1.0])
    D = float(np.linalg.norm(y0)) + 2.0
    M = prob.M
    for T in (10, 100, 1000):
        tr = run_subgradient(prob, y0, TheoremSubgrad(D, T), T)
        gap = min(r[2] for r in tr.rows) - p_star
        bound = M * D / np.sqrt(T + 1) + M * M * D * D / (2.0 * p_star * (T + 1))
        assert gap <= bound + 1e-10
