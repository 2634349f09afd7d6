"""Command-line interface: ``branchhull <command> ...`` (or ``python3 -m branchhull``)."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import theory
from .core import NoiseModel, dumps, generate_instance, instance_from_json, instance_to_json
from .experiments import (
    ExperimentGrid,
    emit_csv,
    emit_plot_script,
    noise_sweep,
    paper_phase_grid,
    phase_diagram,
)
from .projection import HullConstraint, project_constraint
from .robust import RbhOptions, solve_rbh
from .solver import SolverOptions, solve_bh

log = logging.getLogger("branchhull")


def parse_list(text: str, kind=float) -> list:
    """Parse ``"1,2,3"``; ``"a,b,...,c"`` expands the progression ``a, b, ..., c``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." not in parts:
        return [kind(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise argparse.ArgumentTypeError(f"cannot expand {text!r}; use 'a,b,...,c'")
    head = [float(p) for p in parts[:i]]
    stop = float(parts[-1])
    step = head[-1] - head[-2]
    if step <= 0:
        raise argparse.ArgumentTypeError("progression must be increasing")
    count = int(round((stop - head[0]) / step))
    values = [head[0] + k * step for k in range(count + 1)]
    # round away binary noise such as 0.30000000000000004
    values = [round(v, 12) for v in values]
    return [kind(v) for v in values]


def _emit(obj, out=None):
    text = dumps(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_instance(path):
    with open(path, encoding="utf-8") as fh:
        return instance_from_json(fh.read())


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        rho=args.rho,
        max_iters=args.max_iters,
        tol_primal=args.tol,
        tol_dual=args.tol,
    )


def cmd_gen(args):
    noise = NoiseModel(args.noise, args.alpha) if args.alpha > 0 else NoiseModel()
    inst, truth = generate_instance(args.K, args.N, args.L, noise=noise, target=args.target, seed=args.seed)
    text = instance_to_json(inst, truth if args.truth else None)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_solve(args):
    inst, _ = _load_instance(args.instance)
    _emit(solve_bh(inst, _solver_options(args)).to_dict(), args.out)


def cmd_solve_rbh(args):
    inst, _ = _load_instance(args.instance)
    opts = RbhOptions(lambda_=args.lam, inner=_solver_options(args), inner_alternations=args.alternations)
    _emit(solve_rbh(inst, opts).to_dict(), args.out)


def cmd_project(args):
    k = HullConstraint.from_measurement(args.y, args.s)
    u, v = project_constraint(args.p, args.q, k)
    _emit({"inputs": {"p": args.p, "q": args.q, "y": args.y, "s": args.s}, "p": u, "q": v})


def cmd_lemma(args):
    if args.which == "wendel":
        closed = theory.wendel_probability(args.n, args.m)
        rate, ci = theory.mc_sphere_covering(args.n, args.m, args.trials, args.seed)
        out = {"inputs": {"n": args.n, "m": args.m, "trials": args.trials, "seed": args.seed},
               "closed_form": closed, "empirical": rate, "ci": ci}
    elif args.which == "hoeffding":
        out = {"inputs": {"n": args.n, "m": args.m},
               "closed_form": theory.hoeffding_tail_bound(args.n, args.m),
               "empirical": float(theory.binomial_tail(args.n, args.m)), "ci": None}
    else:
        inst, _ = generate_instance(args.K, args.N, args.L, seed=args.seed)
        f_min, g_min = theory.lemma6_count(inst.B, inst.C, args.samples, args.seed)
        out = {"inputs": {"K": args.K, "N": args.N, "L": args.L, "samples": args.samples, "seed": args.seed},
               "closed_form": 0.2 * args.L,
               "empirical": {"min_sampled_count": f_min, "relaxed_min": g_min}, "ci": None}
    _emit(out)


def _finish_sweep(table, args, kind):
    emit_csv(table, args.out)
    if args.plot:
        emit_plot_script(table, kind, args.plot)
    for c in table.aggregate():
        log.info("K=%d N=%d L=%d alpha=%g success=%.2f max_rel=%.3g",
                 c.K, c.N, c.L, c.alpha, c.success_rate, c.max_rel_error)


def cmd_phase(args):
    if args.full:
        grid = paper_phase_grid(args.trials, args.seed)
    else:
        grid = ExperimentGrid(
            dims=[(k, k) for k in args.dims],
            Ls=range(args.Lmin, args.Lmax + 1, args.Lstep),
            trials=args.trials,
            base_seed=args.seed,
        )
    _finish_sweep(phase_diagram(grid), args, "phase")


def cmd_noise(args):
    grid = ExperimentGrid(
        dims=[(args.K, args.N)],
        Ls=range(args.Lmin, args.Lmax + 1, args.Lstep),
        alphas=args.alphas,
        trials=args.trials,
        base_seed=args.seed,
    )
    _finish_sweep(noise_sweep(grid), args, "noise")


def _add_solver_flags(p):
    p.add_argument("--instance", required=True, help="instance JSON from `gen`")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=50000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="branchhull", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="draw a seeded random instance")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--noise", choices=["uniform", "one-sided"], default="uniform")
    p.add_argument("--target", choices=["standard-basis", "gaussian"], default="standard-basis")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-truth", dest="truth", action="store_false", help="omit the hidden signals")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve the BranchHull program")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("solve-rbh", help="solve the Robust BranchHull program")
    _add_solver_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--alternations", type=int, default=100)
    p.set_defaults(func=cmd_solve_rbh)

    p = sub.add_parser("project", help="project (p, q) onto one measurement's set")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--s", type=int, choices=[-1, 0, 1], default=1)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("lemma", help="closed forms vs. empirical checks")
    lsub = p.add_subparsers(dest="which", required=True)
    q = lsub.add_parser("wendel")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--trials", type=int, default=10000)
    q.add_argument("--seed", type=int, default=0)
    q = lsub.add_parser("hoeffding")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q = lsub.add_parser("count")
    q.add_argument("--K", type=int, required=True)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--samples", type=int, default=10000)
    q.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("phase", help="noiseless phase-transition study")
    p.add_argument("--dims", type=lambda s: parse_list(s, int), default=[5, 10, 15, 20])
    p.add_argument("--Lmin", type=int, default=10)
    p.add_argument("--Lmax", type=int, default=120)
    p.add_argument("--Lstep", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="full-size grid (K=N up to 150, L up to 850)")
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("noise", help="noise-level study")
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--Lmin", type=int, default=10)
    p.add_argument("--Lmax", type=int, default=200)
    p.add_argument("--Lstep", type=int, default=10)
    p.add_argument("--alphas", type=parse_list, default=parse_list("0,0.1,...,1"))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.set_defaults(func=cmd_noise)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
