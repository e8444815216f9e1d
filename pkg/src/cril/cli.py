"""Command-line interface: check, run, explore, dag, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import verify
from .analysis import check_well_formed, process_blocks
from .errors import CrilError, ParseError, format_pid, parse_pid
from .ltsi import (
    BACKWARD,
    FORWARD,
    Ltsi,
    RunResult,
    dump_trace,
    load_trace,
    random_scheduler,
    replay,
    round_robin_scheduler,
    run,
    trace_to_json,
)
from .syntax import parse_file

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BLOCKED = 3
EXIT_ASSERT = 4
EXIT_LIMIT = 5


def _load(path: str):
    try:
        return parse_file(path)
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    except ParseError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_schedule(text: str) -> List[tuple]:
    return [parse_pid(part) for part in text.split(",") if part.strip() or part == ""]


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    program = _load(args.file)
    report = check_well_formed(program)
    if args.json:
        data = {
            "ok": report.ok,
            "violations": [
                {"condition": v.condition, "blocks": v.blocks, "message": v.message}
                for v in report.violations
            ],
            "warnings": report.warnings,
        }
        print(json.dumps(data, indent=2))
    else:
        part = process_blocks(program)
        print(f"{args.file}: {len(program.blocks)} blocks, {len(part.classes)} process blocks")
        for i, ids in enumerate(part.classes):
            label = part.label_of_class(i) or "?"
            print(f"  {label}: {', '.join('b%d' % b for b in ids)}")
        print(report.pretty())
    return EXIT_OK if report.ok else 1


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _store_table(program, result: RunResult) -> str:
    """Step-by-step store listing: block rows against variable columns."""
    vars_ = sorted(program.vars)
    width = max([len(v) for v in vars_] + [6])
    id_width = max(
        [len(f"b{t.block_id} ({format_pid(t.pid) or 'e'})") for t in result.trace] + [4]
    )

    def store_row(state) -> str:
        rho = state.config.rho
        return " " * id_width + " | " + " | ".join(
            str(rho.get(v, 0)).rjust(width) for v in vars_
        )

    lines = [" " * id_width + " | " + " | ".join(v.rjust(width) for v in vars_)]
    lines.append(store_row(result.states[0]))
    for t, state in zip(result.trace, result.states[1:]):
        tag = f"b{t.block_id} ({format_pid(t.pid) or 'e'})"
        lines.append(tag.ljust(id_width) + " |" + " |".join([" " * (width + 1)] * len(vars_)))
        lines.append(store_row(state))
    return "\n".join(lines)


def _outcome_exit(outcome: str) -> int:
    return {
        "terminated": EXIT_OK,
        "stopped": EXIT_OK,  # an explicit schedule ran to its end
        "blocked": EXIT_BLOCKED,
        "assert-failed": EXIT_ASSERT,
        "step-limit": EXIT_LIMIT,
    }[outcome]


def cmd_run(args) -> int:
    from .ltsi import RawLtsi

    program = _load(args.file)
    ltsi = RawLtsi(program) if args.raw else Ltsi(program)
    state = ltsi.initial_state()

    if args.scheduler == "round-robin":
        scheduler = round_robin_scheduler()
    else:
        scheduler = random_scheduler(args.seed)

    try:
        if args.dir == BACKWARD:
            # reach a terminal state first, then reverse from it
            if args.forward_schedule:
                fwd_states, fwd_trace = ltsi.run_schedule(
                    state, _parse_schedule(args.forward_schedule), FORWARD
                )
                state = fwd_states[-1]
            else:
                fwd = run(ltsi, state, random_scheduler(args.seed), FORWARD, args.max_steps)
                if fwd.outcome != "terminated":
                    print(f"forward phase did not terminate: {fwd.outcome}", file=sys.stderr)
                    return _outcome_exit(fwd.outcome)
                state = fwd.final

        if args.replay:
            result = replay(ltsi, state, load_trace(args.replay))
        elif args.schedule:
            states, trace = ltsi.run_schedule(state, _parse_schedule(args.schedule), args.dir)
            if args.dir == FORWARD:
                done = ltsi.is_final(states[-1])
            else:
                done = states[-1] == ltsi.initial_state()
            result = RunResult(trace, states, "terminated" if done else "stopped")
        else:
            result = run(ltsi, state, scheduler, args.dir, args.max_steps)
    except CrilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.json:
        print(
            json.dumps(
                {
                    "outcome": result.outcome,
                    "steps": len(result.trace),
                    "final_store": result.final.config.to_json()["rho"],
                    "trace": trace_to_json(result.trace),
                },
                indent=2,
            )
        )
    else:
        if args.table:
            print(_store_table(program, result))
        rho = result.final.config.rho
        print(f"outcome: {result.outcome} after {len(result.trace)} steps")
        print("final store:", ", ".join(f"{k}={v}" for k, v in sorted(rho.items())))
        if result.outcome == "blocked":
            for reason in ltsi.machine.blocked_reasons(result.final.config, args.dir):
                print(f"  blocked: pid {format_pid(reason.pid) or 'e'}: {reason.message}")
    if args.trace_out:
        dump_trace(result.trace, args.trace_out)
    return _outcome_exit(result.outcome)


# ---------------------------------------------------------------------------
# explore
# ---------------------------------------------------------------------------

def cmd_explore(args) -> int:
    program = _load(args.file)
    graph = verify.explore(program, max_states=args.max_states, max_depth=args.max_depth)
    print(
        f"{args.file}: {graph.state_count()} states, {graph.edge_count()} edges"
        + (" (TRUNCATED)" if graph.truncated else "")
    )
    names = [n.strip() for n in args.check.split(",") if n.strip()]
    reports = verify.run_checks(graph, names, cs_bound=args.cs_bound, cl_bound=args.cs_bound)
    all_ok = True
    json_reports = []
    for report in reports:
        print(report.pretty())
        all_ok &= report.ok
        entry = {
            "property": report.property,
            "ok": report.ok,
            "details": report.details,
            "counterexample": report.counterexample,
        }
        if report.counterexample and "state" in report.counterexample:
            entry["counterexample"]["trace_from_initial"] = trace_to_json(
                graph.path_from_initial(report.counterexample["state"])
            )
        json_reports.append(entry)
    if args.json:
        data = {
            "file": args.file,
            "states": graph.state_count(),
            "edges": graph.edge_count(),
            "truncated": graph.truncated,
            "bounds": {"max_states": args.max_states, "max_depth": args.max_depth,
                       "cs_bound": args.cs_bound},
            "checks": json_reports,
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
        print(f"report written to {args.json}")
    return EXIT_OK if all_ok else 1


# ---------------------------------------------------------------------------
# dag
# ---------------------------------------------------------------------------

def cmd_dag(args) -> int:
    program = _load(args.file)
    ltsi = Ltsi(program)
    state = ltsi.initial_state()
    if args.schedule:
        states, _ = ltsi.run_schedule(state, _parse_schedule(args.schedule), FORWARD)
        state = states[-1]
    elif args.run:
        result = run(ltsi, state, random_scheduler(args.seed), FORWARD, args.max_steps)
        state = result.final
    dag = state.dag
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(dag.to_json(), fh, indent=2)
            fh.write("\n")
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(dag.to_dot() + "\n")
    if not args.json_out and not args.dot:
        print(dag.to_dot())
    else:
        print(
            f"DAG after {len(dag.nodes) - 1} steps: {len(dag.nodes)} nodes, "
            f"{len(dag.write_edges)} write edges, {len(dag.read_edges)} read edges"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    from .server import serve

    program = _load(args.file)
    report = check_well_formed(program)
    if not report.ok:
        print(report.pretty(), file=sys.stderr)
        return 1
    static_dir: Optional[Path] = None
    candidates = [args.static, os.environ.get("CRIL_WEBUI")]
    candidates.append(str(Path(__file__).resolve().parents[2] / "frontend" / "dist"))
    for candidate in candidates:
        if candidate and Path(candidate).is_dir():
            static_dir = Path(candidate)
            break
    port = args.port if args.port is not None else int(os.environ.get("CRIL_PORT", "8765"))
    serve(program, args.host, port, args.seed, static_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cril",
        description="Parse, execute (forward and backward), verify, and debug CRIL programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and check well-formedness")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="execute a program")
    p.add_argument("file")
    p.add_argument("--dir", choices=[FORWARD, BACKWARD], default=FORWARD)
    p.add_argument("--seed", type=int, default=0, help="seed for the random scheduler")
    p.add_argument(
        "--scheduler", choices=["random", "round-robin"], default="random"
    )
    p.add_argument("--schedule", help="comma-separated pids (e for the root), e.g. e,e,1,2,3,1,e,e")
    p.add_argument(
        "--forward-schedule",
        help="with --dir backward: pid schedule for the forward phase",
    )
    p.add_argument("--replay", help="replay a trace JSON file")
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--raw", action="store_true",
                   help="basic semantics only: backward steps ignore the annotation DAG")
    p.add_argument("--trace-out", help="write the executed trace as JSON")
    p.add_argument("--table", action=argparse.BooleanOptionalAction, default=True,
                   help="print the step-by-step store table")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", help="explore the state space and check properties")
    p.add_argument("file")
    p.add_argument("--max-states", type=int, default=200_000)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--check", default="sp,bti,wf,loop,cc,cs",
                   help="comma list from sp,bti,wf,loop,cpi,ire,cc,cs,cl")
    p.add_argument("--cs-bound", type=int, default=12, help="path bound for cs/cl")
    p.add_argument("--json", help="write the full report to this file")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("dag", help="print the annotation DAG after a schedule")
    p.add_argument("file")
    p.add_argument("--schedule", help="comma-separated pid schedule (forward)")
    p.add_argument("--run", action="store_true", help="random forward run to termination")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--dot", help="write Graphviz DOT to this file")
    p.add_argument("--json-out", help="write JSON to this file")
    p.set_defaults(func=cmd_dag)

    p = sub.add_parser("serve", help="start the interactive debug service")
    p.add_argument("file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help="default: $CRIL_PORT or 8765")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static", help="directory with the web UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CrilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
