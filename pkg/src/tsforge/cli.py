"""Command-line front end.

Subcommands:

    run      one execution, trace JSON on stdout
    explore  exhaustive interleaving exploration, report JSON on stdout
    stress   many random executions, per-run CSV on stdout
    cover    search for maximal covering configurations, report JSON

Exit codes: 0 all checks pass, 1 property violation, 2 usage error,
3 budget exhausted without a violation.  The TSFORGE_BUDGET environment
variable overrides the default node/path/step budgets.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

from . import verify
from .covering import search_max_covering
from .simulator import (BudgetExceeded, SimulationError, Workload, explore,
                        run_schedule, run_to_completion)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _meta(args) -> dict:
    return {"generated": datetime.datetime.now(datetime.timezone.utc)
                .isoformat(timespec="seconds"),
            "command": " ".join(sys.argv[1:])}


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _workload(args) -> Workload:
    budget = getattr(args, "budget", None)
    kwargs = {}
    if budget is not None:
        kwargs = {"node_budget": budget, "path_budget": budget,
                  "step_budget": budget}
    return Workload(algo=args.algo, n=args.n,
                    calls_per_process=args.calls_per_process,
                    m=args.m, seed=args.seed, **kwargs)


def cmd_run(args) -> int:
    try:
        workload = _workload(args)
        if args.schedule:
            schedule = [int(x) for x in args.schedule.split(",") if x != ""]
            trace = run_schedule(workload, schedule, strict=not args.lenient)
        else:
            trace = run_to_completion(workload, policy=args.policy,
                                      seed=args.seed)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    verdicts = verify.run_all(trace)
    trace.stats["verdicts"] = {k: v.ok for k, v in verdicts.items()}
    print(trace.to_json(meta=None if args.no_meta else _meta(args)))
    for v in verdicts.values():
        for viol in v.violations:
            print(f"{v.checker}: {viol.detail}", file=sys.stderr)
    return EXIT_OK if all(v.ok for v in verdicts.values()) else EXIT_VIOLATION


def cmd_explore(args) -> int:
    try:
        workload = _workload(args)
        report = explore(workload, mode=args.mode)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = report.to_doc()
    if not args.no_meta:
        doc["meta"] = _meta(args)
    print(json.dumps(doc, ensure_ascii=False))
    if report.violations:
        return EXIT_VIOLATION
    if report.budget_exhausted:
        return EXIT_BUDGET
    return EXIT_OK


CSV_COLUMNS = ["run", "seed", "steps", "max_reg_accessed", "max_reg_written",
               "phases", "invalidation_writes", "verdict", "detail"]


def cmd_stress(args) -> int:
    out = csv.writer(sys.stdout, lineterminator="\n")
    if not args.no_meta:
        print(f"# {_meta(args)['generated']} tsforge stress")
    out.writerow(CSV_COLUMNS)
    any_bad = False
    if args.runs == 0:
        return EXIT_OK
    if args.algo == "phase" and args.policy == "random":
        from .fastrun import stress
        results = stress(args.n, args.runs, seed=args.seed,
                         cpp=args.calls_per_process, m=args.m)
        for i, r in enumerate(results):
            bad = not r.ok
            any_bad = any_bad or bad
            out.writerow([i, r.seed, r.steps, r.max_reg_accessed,
                          r.max_reg_written, r.completed_phases,
                          r.invalidation_writes,
                          "fail" if bad else "pass",
                          "; ".join(r.violations)])
        return EXIT_VIOLATION if any_bad else EXIT_OK
    for i in range(args.runs):
        seed = args.seed + i
        workload = Workload(algo=args.algo, n=args.n,
                            calls_per_process=args.calls_per_process,
                            m=args.m, seed=seed)
        try:
            trace = run_to_completion(workload, policy=args.policy, seed=seed)
        except BudgetExceeded as exc:
            any_bad = True
            out.writerow([i, seed, "", "", "", "", "", "fail", str(exc)])
            continue
        verdicts = verify.run_all(trace)
        details = [viol.detail for v in verdicts.values()
                   for viol in v.violations]
        bad = bool(details)
        any_bad = any_bad or bad
        if trace.algo == "phase":
            partition = verify.compute_phases(trace)
            phases = partition.completed_phases
            inval = sum(len({s.reg for s in trace.steps
                             if s.op == "write"
                             and partition.phase_of(s.i) == ph})
                        for ph in range(partition.top_phase + 1))
        else:
            phases, inval = "", ""
        out.writerow([i, seed, trace.stats["steps"],
                      trace.stats["max_reg_accessed"],
                      trace.stats["max_reg_written"], phases, inval,
                      "fail" if bad else "pass", "; ".join(details)])
    return EXIT_VIOLATION if any_bad else EXIT_OK


def cmd_cover(args) -> int:
    try:
        workload = _workload(args)
        report = search_max_covering(workload, budget=args.budget)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = report.to_doc()
    if not args.no_meta:
        doc["meta"] = _meta(args)
    print(json.dumps(doc, ensure_ascii=False))
    return EXIT_BUDGET if report.budget_exhausted else EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--algo", choices=["phase", "simple"], default="phase")
    p.add_argument("--n", type=_positive, required=True,
                   help="number of processes")
    p.add_argument("--calls-per-process", type=_positive, default=1)
    p.add_argument("--m", type=_positive, default=None,
                   help="register count override")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-meta", action="store_true",
                   help="suppress the timestamp header")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsforge",
        description="step-machine simulator and verifier for one-shot "
                    "timestamp algorithms over atomic registers")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="one execution, trace JSON on stdout")
    _add_common(p)
    p.add_argument("--schedule", help="comma-separated process ids")
    p.add_argument("--lenient", action="store_true",
                   help="skip schedule entries for finished processes")
    p.add_argument("--policy", choices=["round-robin", "random",
                                        "adversarial-longest-scan"],
                   default="round-robin")
    p.add_argument("--budget", type=_positive,
                   default=_env_budget_or_none())
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("explore", help="exhaustive interleaving exploration")
    _add_common(p)
    p.add_argument("--mode", choices=["full-paths", "dedup-graph"],
                   default="dedup-graph")
    p.add_argument("--budget", type=_positive,
                   default=_env_budget_or_none(),
                   help="node/path budget")
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("stress", help="random executions, CSV on stdout")
    _add_common(p)
    p.add_argument("--runs", type=_nonnegative, required=True)
    p.add_argument("--policy", choices=["round-robin", "random",
                                        "adversarial-longest-scan"],
                   default="random")
    p.set_defaults(fn=cmd_stress)

    p = sub.add_parser("cover", help="search for covering configurations")
    _add_common(p)
    p.add_argument("--budget", type=_positive,
                   default=_env_budget_or_none())
    p.set_defaults(fn=cmd_cover)
    return parser


def _env_budget_or_none():
    raw = os.environ.get("TSFORGE_BUDGET")
    return int(raw) if raw and raw.isdigit() else None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
