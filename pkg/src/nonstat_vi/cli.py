"""Command-line interface.

Exit status: 0 when everything ran and every check passed, 1 when a bound or
equality check failed, 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .avi import trace_stats
from .bounds import (
    BoundInputs,
    all_policies_bound,
    asymptotic_bounds,
    audit_trace_inequalities,
    build_tightness_instance,
    run_tightness,
    thm1_bound,
    thm3_bound,
)
from .experiment import ExperimentConfig, run_experiment
from .garnet import GarnetSpec, generate_garnet
from .io import FormatError, dumps_mdp, read_mdp, read_trace, write_mdp, write_trace
from .solvers import DEFAULT_TOL, solve_optimal
from .validation import InvalidMdpError

SEED_ENV = "NONSTAT_VI_SEED"
EQUALITY_RTOL = 1e-6


def _fmt(x) -> str:
    return f"{x:.12g}"


def cmd_bounds(args) -> int:
    ms = args.m or [1]
    if any(m < 1 for m in ms):
        raise ValueError("--m values must be >= 1")
    eps_inf = args.eps_inf if args.eps_inf is not None else args.eps / 2
    base = BoundInputs(args.gamma, args.k, 1, args.eps, args.delta, eps_inf)
    print(f"thm1 = {_fmt(thm1_bound(base))}")
    for m in ms:
        b = BoundInputs(args.gamma, args.k, m, args.eps, args.delta, eps_inf)
        print(f"thm3[m={m}] = {_fmt(thm3_bound(b))}")
    print(f"all_policies[m=k={args.k}] = "
          f"{_fmt(all_policies_bound(args.gamma, args.k, args.eps, args.delta))}")
    asym = asymptotic_bounds(args.gamma, eps_inf, args.eps)
    print(f"classic_asymptotic = {_fmt(asym.classic)}")
    print(f"span_limit = {_fmt(asym.span_limit)}")
    print(f"nonstat_limit = {_fmt(asym.nonstat_limit)}")
    return 0


def cmd_tightness(args) -> int:
    inst = build_tightness_instance(args.gamma, args.k, args.eps, args.delta)
    print(f"states = {inst.mdp.n_states}")
    print(f"stay_reward = {_fmt(inst.stay_reward)}")
    print(f"predicted_loss = {_fmt(inst.predicted_loss)}")
    if args.mdp_out:
        write_mdp(inst.mdp, args.mdp_out)
    if not (args.check or args.trace_out):
        return 0
    result = run_tightness(inst)
    if args.trace_out:
        write_trace(result.trace, args.trace_out)
    if not args.check:
        return 0
    gap = abs(result.loss - result.predicted_loss)
    if gap <= EQUALITY_RTOL * max(1.0, abs(result.predicted_loss)):
        print(f"equality OK: loss {_fmt(result.loss)} = bound {_fmt(result.predicted_loss)}")
        return 0
    print(f"equality FAILED: loss {_fmt(result.loss)} != bound {_fmt(result.predicted_loss)}")
    return 1


def cmd_garnet(args) -> int:
    spec = GarnetSpec(
        args.n_states, args.n_actions, args.branching, args.gamma, args.reward_scale,
        _seed(args.seed, 0),
    )
    mdp = generate_garnet(spec)
    if args.output:
        write_mdp(mdp, args.output)
    else:
        sys.stdout.write(dumps_mdp(mdp))
    return 0


def _seed(flag, default):
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    return int(env) if env else default


def cmd_run(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        garnet = GarnetSpec(
            args.n_states, args.n_actions, args.branching, args.gamma, args.reward_scale
        )
        errors = (
            {"kind": "random_span", "bound": args.error_bound}
            if args.error_bound
            else {"kind": "zero"}
        )
        cfg = ExperimentConfig(
            source=args.source,
            k=args.k,
            m_list=args.m or [1],
            garnet=garnet,
            mdp_path=args.mdp,
            tightness={"gamma": args.gamma, "eps": args.eps, "delta": args.delta},
            errors=errors,
            tie_break=args.tie_break,
            tol=args.tol,
            trials=args.trials,
        )
    cfg.base_seed = _seed(args.seed, cfg.base_seed)
    if args.output:
        cfg.output = args.output
    if args.trace_dir:
        cfg.trace_dir = args.trace_dir
    result = run_experiment(cfg)
    if not cfg.output:
        sys.stdout.write(result.to_csv())
    bad = [r for r in result.rows if not r["audit_ok"] or r["margin"] < -1e-8]
    print(f"{len(result.rows)} rows, {len(bad)} violations", file=sys.stderr)
    return 0 if not bad else 1


def cmd_audit(args) -> int:
    mdp = read_mdp(args.mdp)
    trace = read_trace(args.trace)
    if trace.v0.shape != (mdp.n_states,):
        raise FormatError("v0", f"trace has {trace.v0.size} states, MDP has {mdp.n_states}")
    v_star = solve_optimal(mdp, args.tol).value
    ms = args.m or list(range(1, trace.k + 1))
    report = audit_trace_inequalities(mdp, trace, v_star, ms, args.tol)
    stats = trace_stats(trace, v_star)
    print(f"k = {trace.k}, eps_span = {_fmt(stats.eps_span)}, "
          f"eps_inf = {_fmt(stats.eps_inf)}, delta = {_fmt(stats.delta0)}")
    for m in ms:
        measured, bound, slack = report.loss_bound[m]
        print(f"m={m}: loss {_fmt(measured)} bound {_fmt(bound)} margin {_fmt(slack)} "
              f"{'ok' if report.m_ok(m) else 'VIOLATED'}")
    for line in report.violations():
        print(line)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonstat-vi",
        description="Approximate value iteration, periodic policies and their loss bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate the closed-form bounds")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, nargs="+")
    p.add_argument("--eps", type=float, default=0.0, help="span bound on errors")
    p.add_argument("--delta", type=float, default=0.0, help="span(v* - v0)")
    p.add_argument("--eps-inf", type=float, help="max-norm error bound (default eps/2)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("tightness", help="build the chain on which the bound is tight")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--check", action="store_true", help="run AVI and compare loss to bound")
    p.add_argument("--mdp-out", help="write the MDP file here")
    p.add_argument("--trace-out", help="write the AVI trace here")
    p.set_defaults(func=cmd_tightness)

    p = sub.add_parser("garnet", help="write a random Garnet MDP")
    _garnet_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_garnet)

    p = sub.add_parser("run", help="run an experiment and write CSV")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--source", choices=("garnet", "file", "tightness"), default="garnet")
    p.add_argument("--mdp", help="MDP file for --source file")
    _garnet_flags(p)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--m", type=int, nargs="+")
    p.add_argument("--eps", type=float, default=0.1, help="tightness error level")
    p.add_argument("--delta", type=float, default=1.0, help="tightness initial gap")
    p.add_argument("--error-bound", type=float, default=0.0,
                   help="span bound of random errors (0 disables them)")
    p.add_argument("--tie-break", choices=("lowest", "highest"), default="lowest")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--trace-dir", help="save each trial's AVI trace here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="check the bound's intermediate inequalities on a trace")
    p.add_argument("--mdp", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--m", type=int, nargs="+")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_audit)
    return parser


def _garnet_flags(p):
    p.add_argument("--n-states", type=int, default=20)
    p.add_argument("--n-actions", type=int, default=4)
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--reward-scale", type=float, default=1.0)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, FormatError, InvalidMdpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
