"""Benchmark and certification command line interface.

Subcommands:

* ``gaugeopt feasibility``  — random two-ellipsoid feasibility run.
* ``gaugeopt trust-region`` — concave quadratic over an ellipsoid via the
  radial dual, with primal recovery.
* ``gaugeopt certify``      — constant certification report for a set.
* ``gaugeopt verify``       — run the oracle agreement suites.

Report paths write the trace CSV, a JSON summary, and a rendered PNG
convergence figure side by side.  Exit codes: 0 success, 2 divergence,
3 infeasible target.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import verify
from .finitemax import recover_primal
from .gauge import (
    GaugeOracle,
    estimate_constants_by_sampling,
    gauge,
    global_structure,
)
from .instances import generate_feasibility, generate_trust_region
from .sets import set_from_json, structure_constants
from .solvers import (
    InverseSqrt,
    TheoremSubgrad,
    Trace,
    run_accelerated,
    run_gen_gradient,
    run_level,
    run_subgradient,
)
from .steps import gen_grad_step, level_proj_step
from .verify import gauge_bisection, small_qp_enumerate

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_INFEASIBLE = 3


def _default_schedule(problem, y0, T, eta=None, name="theorem"):
    if name == "theorem":
        R = min(1.0 / c.M for c in problem.components)
        D = float(np.linalg.norm(y0)) + 2.0 * R
        return TheoremSubgrad(D=D, T=T)
    if name == "invsqrt":
        return InverseSqrt(eta=eta if eta is not None else 1.0)
    raise ValueError(f"unknown schedule: {name}")


def _write_outputs(out_path: str, traces: dict, summary: dict, p_star=None, title=""):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    if len(traces) == 1:
        next(iter(traces.values())).to_csv(out)
    else:
        for label, trace in traces.items():
            trace.to_csv(out.with_name(f"{out.stem}_{label}{out.suffix or '.csv'}"))
    summary_path = out.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    from .plotting import render_trace_figure

    render_trace_figure(traces, out.with_suffix(".png"), p_star=p_star, title=title)


def _trace_summary(label: str, trace: Trace) -> dict:
    first_feasible = next((r[0] for r in trace.rows if r[5]), None)
    return {
        "method": label,
        "iterations": trace.rows[-1][0] if trace.rows else 0,
        "final_objective": trace.rows[-1][2] if trace.rows else math.nan,
        "best_objective": trace.best_objective,
        "elapsed_s": trace.rows[-1][1] if trace.rows else 0.0,
        "first_feasible_iteration": first_feasible,
        "diverged": trace.diverged,
        "infeasible_target": trace.infeasible_target,
    }


def run_experiment(config: dict) -> int:
    """Programmatic entry point mirroring the CLI subcommands."""
    sub = config["subcommand"]
    if sub == "feasibility":
        return _cmd_feasibility(argparse.Namespace(**config))
    if sub == "trust-region":
        return _cmd_trust_region(argparse.Namespace(**config))
    raise ValueError(f"unknown subcommand: {sub}")


def _run_method(method, problem, y0, iters, args):
    if method == "subgrad":
        return run_subgradient(problem, y0, _default_schedule(problem, y0, iters), iters)
    if method == "gengrad":
        return run_gen_gradient(problem, y0, _default_schedule(problem, y0, iters), iters)
    if method == "accel":
        L = getattr(args, "L", None)
        mu = getattr(args, "mu", None)
        if L is None:
            oracles = [c.oracle for c in problem.components if hasattr(c, "oracle")]
            ests = [
                estimate_constants_by_sampling(o, 200, np.random.default_rng(0))
                for o in oracles
            ]
            L = max((e[1] for e in ests), default=problem.L)
            if mu is None:
                mu = min((e[0] for e in ests), default=0.0)
            if not math.isfinite(L):
                L = problem.L if math.isfinite(problem.L) else 1.0
        if mu is None:
            mu = 0.0
        if mu < 1e-9 * L:
            # A negligible mu only poisons the momentum start sqrt(mu/L).
            mu = 0.0
        return run_accelerated(problem, y0, L=L, mu=max(0.0, min(mu, L)), T=iters)
    if method == "level":
        f_bar = getattr(args, "fbar", None) or 1.0
        return run_level(problem, y0, f_bar, iters)
    raise ValueError(f"unknown method: {method}")


def _cmd_feasibility(args) -> int:
    instance = generate_feasibility(args.n, args.p1, args.p2, args.seed)
    problem = instance.problem()
    y0 = np.zeros(args.n)
    methods = ["subgrad", "gengrad", "accel", "level"] if args.method == "all" else [args.method]
    traces = {}
    for method in methods:
        traces[method] = _run_method(method, problem, y0, args.iters, args)
    summary = {
        "instance": json.loads(instance.to_json()),
        "runs": [_trace_summary(m, t) for m, t in traces.items()],
    }
    del summary["instance"]["sets"]  # matrices are large; the seed regenerates them
    _write_outputs(
        args.out, traces, summary, title=f"feasibility n={args.n} p=({args.p1},{args.p2})"
    )
    if any(t.infeasible_target for t in traces.values()):
        return EXIT_INFEASIBLE
    if any(t.diverged for t in traces.values()):
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_trust_region(args) -> int:
    instance = generate_trust_region(args.n, args.m, args.p, args.seed)
    problem = instance.radial_problem()
    if getattr(args, "L", None) is None:
        est_L, est_mu = instance.estimated_constants()
        args.L = est_L
        if getattr(args, "mu", None) is None:
            args.mu = est_mu
    y0 = np.zeros(args.n)
    trace = _run_method(args.method, problem, y0, args.iters, args)
    y_best = trace.best_point
    x, value = recover_primal(problem, y_best)
    x_orig = instance.to_original(x)
    oracle = GaugeOracle(instance.constraint_set(), np.zeros(args.n))
    feas = gauge(oracle, x).value
    summary = {
        "instance": {"kind": "radial_quadratic", "seed": args.seed, "n": args.n,
                     "m": args.m, "p": args.p},
        "runs": [_trace_summary(args.method, trace)],
        "primal_value": instance.value_to_original(value),
        "primal_gauge": feas,
        "primal_point_norm": float(np.linalg.norm(x_orig)),
    }
    _write_outputs(
        args.out,
        {args.method: trace},
        summary,
        title=f"trust region n={args.n} m={args.m} p={args.p}",
    )
    if trace.infeasible_target:
        return EXIT_INFEASIBLE
    if trace.diverged:
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_certify(args) -> int:
    text = Path(args.set).read_text() if Path(args.set).exists() else args.set
    s = set_from_json(text)
    e = (
        np.array([float(v) for v in args.center.split(",")])
        if args.center
        else np.zeros(s.dim)
    )
    sc = structure_constants(s)
    oracle = GaugeOracle(s, e)
    mu, L = global_structure(oracle)
    print(f"set kind: {s.kind} (dimension {s.dim})")
    print(f"alpha = {sc.alpha!r}, beta = {sc.beta!r}")
    print(f"inscribed radius R = {oracle.R!r}, circumscribed D = {oracle.D!r}")
    print(f"global constants: mu = {mu!r}, L = {L!r}")
    if oracle.D != math.inf:
        mu_est, L_est = estimate_constants_by_sampling(
            oracle, args.samples, np.random.default_rng(args.seed)
        )
        print(f"sampled constants ({args.samples} boundary points): "
              f"mu_est = {mu_est:.6g}, L_est = {L_est:.6g}")
    return EXIT_OK


def _verify_gauges(rng, cases: int) -> tuple[str, int]:
    from .sets import Ball, Halfspace, PNormBall, PNormEllipsoid

    worst = 0.0
    count = 0
    for _ in range(cases):
        n = int(rng.integers(2, 6))
        e = rng.standard_normal(n) * 0.1
        y = rng.standard_normal(n) * 2.0
        pool = [Halfspace(rng.standard_normal(n), 1.0 + rng.random()),
                Ball(rng.standard_normal(n) * 0.2, 1.0 + rng.random())]
        for p in (2.0, 4.0, 1.7):
            pool.append(
                PNormEllipsoid(rng.standard_normal((n, n)), rng.standard_normal(n) * 0.1, p,
                               1.0 + rng.random())
            )
        for s in pool:
            try:
                oracle = GaugeOracle(s, e)
            except ValueError:
                continue
            fast = gauge(oracle, y).value
            slow = gauge_bisection(s, e, y)
            worst = max(worst, abs(fast - slow) / max(1.0, slow))
            count += 1
    ok = worst <= 1e-10
    print(f"gauge closed forms vs bisection: {count} cases, worst rel err {worst:.3e} "
          f"[{'ok' if ok else 'FAIL'}]")
    return "gauge", 0 if ok else 1


def _verify_steps(rng, cases: int) -> tuple[str, int]:
    from .finitemax import FiniteMaxProblem

    class _Affine:
        # Synthetic nonnegative affine-plus-norm component for step tests.
        def __init__(self, a, b):
            self.a, self.b = a, float(b)
            self.M = float(np.linalg.norm(a)) + 1.0
            self.mu, self.L = 0.0, math.inf

        def eval(self, y):
            return float(np.linalg.norm(y - self.a)) + self.b

        def half_sq_subgrad(self, y):
            d = np.asarray(y, dtype=float) - self.a
            nd = float(np.linalg.norm(d))
            g = d / nd if nd > 0 else np.zeros_like(d)
            return self.eval(y) * g

        def eval_pair(self, y):
            return self.eval(y), self.half_sq_subgrad(y)

    worst_g = worst_l = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        comps = [_Affine(rng.standard_normal(n), rng.random()) for _ in range(2)]
        problem = FiniteMaxProblem(comps)
        y = rng.standard_normal(n)
        alpha = 0.1 + rng.random()
        f_vals, V = problem.component_pairs(y)
        G = V / f_vals[:, None]
        z_fast = gen_grad_step(problem, y, alpha).next_point
        z_slow = small_qp_enumerate("prox_linear", f_vals, G, y, alpha)
        worst_g = max(worst_g, float(np.linalg.norm(z_fast - z_slow)))
        fbar = 0.5 * float(np.max(f_vals)) + 0.25
        z_fast = level_proj_step(problem, y, fbar).next_point
        z_slow = small_qp_enumerate("level_projection", f_vals, G, y, fbar)
        worst_l = max(worst_l, float(np.linalg.norm(z_fast - z_slow)))
    ok = worst_g <= 1e-8 and worst_l <= 1e-8
    print(f"m=2 step closed forms vs enumeration: {cases} cases, "
          f"worst errors {worst_g:.3e} / {worst_l:.3e} [{'ok' if ok else 'FAIL'}]")
    return "steps", 0 if ok else 1


def _verify_hessians(rng, cases: int) -> tuple[str, int]:
    from .gauge import ball_gauge, ball_gauge_hessian, hessian_eigenvalues

    worst_fd = worst_eig = 0.0
    done = 0
    while done < cases:
        n = int(rng.integers(2, 8))
        yb = rng.standard_normal(n)
        z = rng.standard_normal(n)
        z /= np.linalg.norm(z)
        if float(z @ yb) <= 0.2:
            continue
        r = 0.5 + 2.0 * rng.random()
        H = ball_gauge_hessian(yb, z, r)
        c = yb - r * z
        # step shrinks with the conditioning scale zeta.y_bar
        h = 2e-4 * min(max(float(z @ yb), 1e-3), max(1.0, float(np.linalg.norm(yb))))
        Hfd = verify.finite_diff_hessian(
            lambda v: 0.5 * ball_gauge(c, r, v) ** 2, yb, h
        )
        worst_fd = max(worst_fd, float(np.abs(H - Hfd).max() / np.abs(H).max()))
        lo, mid, hi, _, _ = hessian_eigenvalues(yb, z, r)
        ev = verify.symmetric_eigs(H)
        worst_eig = max(worst_eig, abs(ev[0] - lo), abs(ev[-1] - hi))
        done += 1
    ok = worst_fd <= 1e-5 and worst_eig <= 1e-10
    print(f"ball-gauge Hessian: {cases} cases, FD rel err {worst_fd:.3e}, "
          f"eigenvalue err {worst_eig:.3e} [{'ok' if ok else 'FAIL'}]")
    return "hessian", 0 if ok else 1


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0
    for fn, cases in (
        (_verify_gauges, args.cases // 5),
        (_verify_steps, args.cases),
        (_verify_hessians, args.cases // 2),
    ):
        _, code = fn(rng, max(cases, 10))
        failures += code
    print("all suites passed" if failures == 0 else f"{failures} suite(s) FAILED")
    return EXIT_OK if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaugeopt", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    feas = sub.add_parser("feasibility", help="two-ellipsoid feasibility benchmark")
    feas.add_argument("--n", type=int, default=100)
    feas.add_argument("--p1", type=float, default=2.0)
    feas.add_argument("--p2", type=float, default=2.0)
    feas.add_argument("--seed", type=int, default=0)
    feas.add_argument("--method", default="all",
                      choices=["subgrad", "gengrad", "accel", "level", "all"])
    feas.add_argument("--iters", type=int, default=1000)
    feas.add_argument("--fbar", type=float, default=1.0)
    feas.add_argument("--L", type=float, default=None)
    feas.add_argument("--mu", type=float, default=None)
    feas.add_argument("--out", default="feasibility_trace.csv")
    feas.set_defaults(func=_cmd_feasibility)

    tr = sub.add_parser("trust-region", help="quadratic-over-ellipsoid benchmark")
    tr.add_argument("--n", type=int, default=50)
    tr.add_argument("--m", type=int, default=25)
    tr.add_argument("--p", type=float, default=2.0)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--method", default="accel",
                    choices=["subgrad", "gengrad", "accel", "level"])
    tr.add_argument("--iters", type=int, default=2000)
    tr.add_argument("--L", type=float, default=None)
    tr.add_argument("--mu", type=float, default=None)
    tr.add_argument("--fbar", type=float, default=1.0)
    tr.add_argument("--out", default="trust_region_trace.csv")
    tr.set_defaults(func=_cmd_trust_region)

    cert = sub.add_parser("certify", help="constant certification for a set JSON")
    cert.add_argument("--set", required=True, help="path to a set JSON file, or inline JSON")
    cert.add_argument("--center", default=None, help="comma-separated gauge center")
    cert.add_argument("--samples", type=int, default=100000)
    cert.add_argument("--seed", type=int, default=0)
    cert.set_defaults(func=_cmd_certify)

    ver = sub.add_parser("verify", help="run the oracle agreement suites")
    ver.add_argument("--cases", type=int, default=100)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
