"""Command-line front end.

    tel-lab solve     --scenario S [--seed N] [--out DIR]
    tel-lab simulate  --scenario S [--replicas N] [--mode tel|baseline|both] [--plans P]
    tel-lab rules     --scenario S [--plans P]
    tel-lab hops      --topology-dir DIR [--min-links 5 --max-links 250]
    tel-lab validate  --scenario S [--plans P]

Exit codes: 0 ok, 1 usage or parse error, 2 infeasible demand,
3 simulation invariant or constraint violation. Log level comes from
the TEL_LAB_LOG environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from .constraints import validate_plans
from .dataplane import SimulationInvariantError
from .dla import InvariantViolation, PathPlan, SolverConfig
from .experiments import hop_comparison, load_zoo, run_replica, solve, summarize
from .rulegen import compile_plans, memory_cost, registers_json, rules_jsonl
from .scenario import Scenario, ScenarioError
from .topology import TopologyError

log = logging.getLogger("tel_lab")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- scenario handling ------------------------------------------------------


def load_scenario(args) -> Scenario:
    if not args.scenario:
        raise UsageError("--scenario is required")
    sc = Scenario.load(args.scenario)
    # flags > file > defaults
    if getattr(args, "seed", None) is not None:
        sc.solver.seed = args.seed
        if sc.random_demands:
            sc.random_demands = dataclasses.replace(sc.random_demands, seed=args.seed)
        if sc.random_failures:
            sc.random_failures = dataclasses.replace(sc.random_failures, seed=args.seed)
    if getattr(args, "replicas", None) is not None:
        if args.replicas < 1:
            raise UsageError("--replicas must be >= 1")
        sc.replicas = args.replicas
    if getattr(args, "out", None):
        sc.outputs = args.out
    return sc


def load_plans(path: str) -> list[PathPlan | None]:
    data = json.loads(Path(path).read_text())
    return [PathPlan.from_dict(p) if p else None for p in data["plans"]]


def plans_json(plans: list[PathPlan | None]) -> str:
    return json.dumps(
        {
            "plans": [p.to_dict() if p else None for p in plans],
            "infeasible": [i for i, p in enumerate(plans) if p is None],
        },
        indent=2,
    ) + "\n"


def _plans_for(sc: Scenario, args, graph):
    if getattr(args, "plans", None):
        return load_plans(args.plans)
    demands = sc.build_demands(graph)
    return solve(graph, demands, sc.solver.config(len(demands)))


# -- subcommands ------------------------------------------------------------


def cmd_solve(args) -> int:
    sc = load_scenario(args)
    graph = sc.build_graph()
    demands = sc.build_demands(graph)
    plans = solve(graph, demands, sc.solver.config(len(demands)))
    out = Path(sc.outputs)
    write_atomic(out / "plans.json", plans_json(plans))
    bad = [i for i, p in enumerate(plans) if p is None]
    log.info("solved %d/%d demands", len(plans) - len(bad), len(plans))
    if bad:
        print(f"infeasible demands: {bad}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args)
    modes = ("tel", "baseline") if args.mode == "both" else (args.mode,)
    graph = sc.build_graph()
    given = load_plans(args.plans) if args.plans else None
    results = [run_replica(sc, r, modes, graph=graph, plans=given) for r in range(sc.replicas)]
    thr, fct, util = [], [], []
    for res in results:
        ids = res.flow_ids
        for mode, m in res.metrics.items():
            thr += [(f"{t:g}", ids[f], f"{bps:.6f}", mode, res.replica) for t, f, bps in m.throughput]
            fct += [
                (ids[f], f"{v:.6f}" if v != float("inf") else "inf", mode, res.replica)
                for f, v in sorted(m.fct.items())
            ]
            util += [(f"{t:g}", l[0], l[1], f"{u:.9f}", mode, res.replica) for t, l, u in m.utilization]
    out = Path(sc.outputs)
    write_atomic(out / "throughput.csv", _csv(["time_ms", "flow_id", "bps", "mode", "replica"], thr))
    write_atomic(out / "fct.csv", _csv(["flow_id", "fct_ms", "mode", "replica"], fct))
    write_atomic(out / "utilization.csv", _csv(["time_ms", "src", "dst", "utilization", "mode", "replica"], util))
    summary = summarize(results)
    summary["scenario"] = sc.name
    write_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if summary["infeasible_demands"]:
        print(f"{summary['infeasible_demands']} infeasible demand(s) across replicas", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_rules(args) -> int:
    sc = load_scenario(args)
    graph = sc.build_graph()
    plans = _plans_for(sc, args, graph)
    rulesets = compile_plans(graph, plans)
    failures = [[ev.link] for ev in sc.build_failures(graph, plans)]
    report = memory_cost(plans, failures, graph.switches)
    out = Path(sc.outputs)
    write_atomic(out / "rules.jsonl", rules_jsonl(rulesets))
    write_atomic(out / "registers.json", json.dumps(registers_json(rulesets), indent=2) + "\n")
    write_atomic(out / "memory.csv", report.to_csv())
    return EXIT_INFEASIBLE if any(p is None for p in plans) else EXIT_OK


def cmd_hops(args) -> int:
    if not Path(args.topology_dir).is_dir():
        raise UsageError(f"not a directory: {args.topology_dir}")
    warnings: list[str] = []
    graphs = load_zoo(args.topology_dir, args.min_links, args.max_links, warnings)
    cfg = SolverConfig(iterations_I=args.iterations, seed=args.seed or 0, reward_a=args.reward_a)
    rows = []
    for g in graphs:
        r = hop_comparison(g, cfg, max_pairs=args.max_pairs, seed=args.seed or 0)
        rows.append((
            r.topology, r.nodes, r.links, r.pairs, f"{r.tel_primary:.6f}",
            "" if r.tel_backup is None else f"{r.tel_backup:.6f}", f"{r.baseline:.6f}", f"{r.ratio:.6f}",
        ))
    out = Path(args.out or "results/hops")
    header = ["topology", "nodes", "links", "pairs", "tel_primary", "tel_backup", "baseline", "ratio"]
    write_atomic(out / "hops.csv", _csv(header, rows))
    if warnings:
        write_atomic(out / "warnings.json", json.dumps(warnings, indent=2) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = load_scenario(args)
    graph = sc.build_graph()
    plans = _plans_for(sc, args, graph)
    found = validate_plans(graph, plans, sc.solver.config(max(len(plans), 1)).capacity_policy)
    out = Path(sc.outputs)
    write_atomic(out / "violations.json", json.dumps([v.to_dict() for v in found], indent=2, default=str) + "\n")
    if found:
        print(f"{len(found)} constraint violation(s)", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_INFEASIBLE if any(p is None for p in plans) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tel-lab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, plans=True):
        p.add_argument("--scenario", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if plans:
            p.add_argument("--plans", help="reuse a plans.json instead of solving")
        return p

    common(sub.add_parser("solve", help="compute primary and backup paths"), plans=False)
    p = common(sub.add_parser("simulate", help="run TEL and/or baseline simulations"))
    p.add_argument("--replicas", type=int)
    p.add_argument("--mode", choices=["tel", "baseline", "both"], default="both")
    common(sub.add_parser("rules", help="emit rules, registers and memory report"))
    common(sub.add_parser("validate", help="check plans against all constraints"))
    p = sub.add_parser("hops", help="hop-count comparison over a topology directory")
    p.add_argument("--topology-dir", required=True)
    p.add_argument("--min-links", type=int, default=5)
    p.add_argument("--max-links", type=int, default=250)
    p.add_argument("--max-pairs", type=int, default=150)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--reward-a", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    return ap


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "rules": cmd_rules,
    "hops": cmd_hops,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("TEL_LAB_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScenarioError, TopologyError, OSError, ValueError, KeyError) as e:
        print(f"tel-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationInvariantError, InvariantViolation) as e:
        print(f"tel-lab: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
