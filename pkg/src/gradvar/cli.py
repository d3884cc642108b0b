"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 capacity exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import advisor, bench
from .core import instance_to_dict, load_instance, save_instance
from .errors import CapacityExceeded, GradvarError, IOFailure
from .generators import FAMILIES, GeneratorSpec
from .landscape import gradient_variance, landscape_scan
from .reformulate import STRATEGIES, StrategyParams, reformulate
from .solvers import SOLVERS, make_config, run_solver

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4


def _parse_params(items: Sequence[str] | None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _emit(data: Any, out: str | None) -> None:
    text = json.dumps(data, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(args.family, args.n, args.seed, _parse_params(args.param))
    inst = spec.build()
    if args.out:
        save_instance(inst, args.out)
    else:
        print(json.dumps(instance_to_dict(inst)))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    report = gradient_variance(inst, args.samples, args.seed, args.workers)
    data: dict[str, Any] = {"label": inst.label, "n": inst.n, **report.to_dict()}
    if not args.per_var:
        data.pop("per_var")
    if args.scan:
        data["scan"] = landscape_scan(inst).to_dict()
    _emit(data, args.out)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    params = _parse_params(args.param)
    if args.seed is not None and args.solver != "brute_force":
        params["seed"] = args.seed
    config = make_config(args.solver, params)
    outcome = run_solver(args.solver, inst, config, reference=args.reference, workers=args.workers)
    _emit(outcome.to_dict(timing=not args.no_timing), args.out)
    return EXIT_OK


def _table(trace) -> str:
    head = f"{'iter':>4}  {'strategy':<12} {'sigma_before':>14} {'sigma_after':>14}  {'accepted':<8} check"
    lines = [head, "-" * len(head)]
    for s in trace.steps:
        after = "-" if s.sigma_after is None else f"{s.sigma_after:.6g}"
        check = "-" if s.semantic_mode is None else f"{s.semantic_mode}:{'pass' if s.semantic_passed else 'fail'}"
        lines.append(f"{s.iteration:>4}  {s.strategy:<12} {s.sigma_before:>14.6g} {after:>14}  "
                     f"{'yes' if s.accepted else 'no':<8} {check}")
    lines.append(f"sigma {trace.sigma_initial:.6g} -> {trace.sigma_final:.6g}; n {trace.initial.n} -> "
                 f"{trace.final.n}; {trace.iterations} accepted; stop: {trace.stop_reason}")
    return "\n".join(lines)


def cmd_reformulate(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    strategies = args.strategies.split(",") if args.strategies else list(STRATEGIES)
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown strategies {sorted(unknown)}")
    params = StrategyParams(penalty_scale=args.gamma, aux_lambda=args.aux_lambda)
    final, trace = reformulate(inst, args.target, args.max_iter, strategies, params,
                               args.samples, args.seed, args.check_mode)
    print(_table(trace))
    if args.out:
        save_instance(final, args.out)
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_advise(args: argparse.Namespace) -> int:
    growth = 0
    if args.sigma is not None:
        sigma, n = args.sigma, args.n
    elif args.instance:
        inst = load_instance(args.instance)
        sigma = gradient_variance(inst, args.samples, args.seed).sigma_grad
        n = inst.n
        growth = int(inst.provenance.get("size_growth", 0)) if isinstance(inst.provenance, dict) else 0
    else:
        raise argparse.ArgumentTypeError("give an instance file or --sigma")
    rec = advisor.recommend(sigma, n, growth)
    wkb = advisor.WkbParams(args.alpha, args.kT, args.delta_e)
    if args.json:
        _emit({**rec.to_dict(), "wkb": wkb.to_dict(), "sigma_critical": advisor.critical_sigma(wkb)}, None)
    else:
        print(advisor.render(rec, wkb))
    return EXIT_OK


def cmd_bench_run(args: argparse.Namespace) -> int:
    plan = bench.ExperimentPlan.load(args.plan)
    out = args.out or plan.output_dir
    if not out:
        raise argparse.ArgumentTypeError("plan has no output_dir; pass --out")
    result = bench.run_plan(plan, args.workers)
    bench.save_result(result, out, plan)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(result.rows)} rows, {len(result.errors)} errors, {len(result.skips)} skips -> {out}")
    return EXIT_OK


def cmd_bench_report(args: argparse.Namespace) -> int:
    made = bench.report(args.dir)
    _emit(made, None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradvar", description="QUBO landscape analysis and solver benchmarking")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded benchmark instance")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, required=True, help="variables (elements for set_cover)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="gradient-variance report")
    a.add_argument("instance")
    a.add_argument("--samples", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--scan", action="store_true", help="also enumerate the landscape (n <= 20)")
    a.add_argument("--per-var", action="store_true")
    a.add_argument("-o", "--out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("solve", help="run one solver")
    s.add_argument("instance")
    s.add_argument("--solver", choices=sorted(SOLVERS), default="sa")
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    s.add_argument("--seed", type=int)
    s.add_argument("--reference", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--no-timing", action="store_true")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("reformulate", help="raise sigma without changing the optimum")
    r.add_argument("instance")
    r.add_argument("--target", type=float, default=0.35)
    r.add_argument("--max-iter", type=int, default=15)
    r.add_argument("--strategies", help=f"comma list from {','.join(STRATEGIES)}")
    r.add_argument("--gamma", type=float, default=1.5)
    r.add_argument("--aux-lambda", type=float, default=0.8)
    r.add_argument("--samples", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--check-mode", choices=("auto", "exhaustive", "sampled"), default="auto")
    r.add_argument("-o", "--out")
    r.add_argument("--trace")
    r.set_defaults(func=cmd_reformulate)

    v = sub.add_parser("advise", help="quantum/classical recommendation")
    v.add_argument("instance", nargs="?")
    v.add_argument("--sigma", type=float)
    v.add_argument("--n", type=int)
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--alpha", type=float, default=2.1)
    v.add_argument("--kT", type=float, default=1.0)
    v.add_argument("--delta-e", type=float, default=7.0)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_advise)

    b = sub.add_parser("bench", help="experiment plans")
    bsub = b.add_subparsers(dest="bench_command", required=True)
    br = bsub.add_parser("run")
    br.add_argument("plan")
    br.add_argument("--out")
    br.add_argument("--workers", type=int)
    br.set_defaults(func=cmd_bench_run)
    bp = bsub.add_parser("report")
    bp.add_argument("dir")
    bp.set_defaults(func=cmd_bench_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (IOFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GradvarError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
