"""End-to-end pipelines shared by the CLI, scripts and acceptance suite."""

from __future__ import annotations

import logging
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from . import baseline
from .dataplane import FlowSimulator, SimMetrics
from .dla import FlowDemand, PathPlan, SolverConfig, select_paths, solve_demand
from .rulegen import SwitchRuleSet, assign_flow_set_ids, compile_plans
from .scenario import Scenario
from .topology import LinkAttributes, NetworkGraph, TopologyError, load_graphml

log = logging.getLogger(__name__)


def number_plans(plans: list[PathPlan | None]) -> list[PathPlan | None]:
    """assign_flow_set_ids over the feasible plans, keeping None slots."""
    feasible = [p for p in plans if p is not None]
    if not feasible:
        return list(plans)
    it = iter(assign_flow_set_ids(feasible))
    return [None if p is None else next(it) for p in plans]


def solve(graph: NetworkGraph, demands: list[FlowDemand], cfg: SolverConfig) -> list[PathPlan | None]:
    return number_plans(select_paths(graph, demands, cfg))


@dataclass
class ReplicaResult:
    replica: int
    demands: list[FlowDemand]
    plans: list[PathPlan | None]
    rulesets: dict[str, SwitchRuleSet]
    failures: list
    metrics: dict[str, SimMetrics] = field(default_factory=dict)
    # simulator flow index -> position in ``demands``
    flow_ids: list[int] = field(default_factory=list)


def run_replica(
    scenario: Scenario,
    replica: int = 0,
    modes: tuple[str, ...] = ("tel", "baseline"),
    graph: NetworkGraph | None = None,
    plans: list[PathPlan | None] | None = None,
) -> ReplicaResult:
    """Solve (unless ``plans`` are given), compile and simulate one seeded replica."""
    if graph is None:
        graph = scenario.build_graph()
    if plans is not None:
        demands = [p.demand for p in plans if p is not None]
    else:
        demands = scenario.build_demands(graph, replica)
        plans = solve(graph, demands, scenario.solver.config(len(demands), replica))
    rulesets = compile_plans(graph, plans)
    failures = scenario.build_failures(graph, plans, replica)
    res = ReplicaResult(replica, demands, plans, rulesets, failures)
    # both modes carry only the demands TEL admitted, so they see the same load
    admitted = [p for p in plans if p is not None]
    flows = [p.demand for p in admitted]
    res.flow_ids = [i for i, p in enumerate(plans) if p is not None]
    for mode in modes:
        sim = FlowSimulator(graph, admitted, rulesets, flows, scenario.sim, mode=mode)
        for ev in failures:
            sim.inject_failure(ev)
        res.metrics[mode] = sim.run()
    return res


def quantiles(values: list[float], qs=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)) -> list[float]:
    """Linear-interpolated quantiles; infinite values sort last."""
    xs = sorted(values)
    out = []
    for q in qs:
        pos = q * (len(xs) - 1)
        lo = int(pos)
        hi = min(lo + 1, len(xs) - 1)
        if xs[hi] == float("inf"):
            out.append(xs[hi] if pos > lo else xs[lo])
            continue
        out.append(xs[lo] + (xs[hi] - xs[lo]) * (pos - lo))
    return out


def summarize(results: list[ReplicaResult]) -> dict:
    """Per-mode averages over replicas; order-independent (keyed by replica)."""
    results = sorted(results, key=lambda r: r.replica)
    out: dict = {"replicas": len(results), "modes": {}}
    modes = sorted({m for r in results for m in r.metrics})
    for mode in modes:
        ms = [r.metrics[mode] for r in results]
        fcts = [v for m in ms for v in m.fct.values()]
        finite = [v for v in fcts if v != float("inf")]
        out["modes"][mode] = {
            "mean_throughput_bps": statistics.fmean(m.mean_throughput() for m in ms),
            "delivered_bytes": statistics.fmean(m.total_delivered for m in ms),
            "lost_bytes": statistics.fmean(sum(m.lost_bytes.values()) for m in ms),
            "disconnected_flows": statistics.fmean(len(m.disconnected) for m in ms),
            "mean_fct_ms": statistics.fmean(finite) if finite else None,
            "unfinished_flows": len(fcts) - len(finite),
            "mean_recovery_ms": _mean_recovery(ms),
        }
    out["infeasible_demands"] = sum(p is None for r in results for p in r.plans)
    return out


def _mean_recovery(ms: list[SimMetrics]):
    spans = [end - start for m in ms for v in m.outages.values() for start, end in v if end is not None]
    return statistics.fmean(spans) if spans else None


# -- hop comparison -------------------------------------------------------------


@dataclass
class HopRow:
    topology: str
    nodes: int
    links: int
    pairs: int
    tel_primary: float
    tel_backup: float | None
    baseline: float

    @property
    def ratio(self) -> float:
        return self.tel_primary / self.baseline


def hop_comparison(
    graph: NetworkGraph,
    cfg: SolverConfig,
    max_pairs: int = 150,
    seed: int = 0,
) -> HopRow:
    """Mean switch hops of TEL primaries/backups against Dijkstra.

    Every unordered switch pair is solved on its own (no packing). Above
    ``max_pairs`` a seeded sample is used instead.
    """
    nodes = sorted(graph.switches)
    pairs = [(s, d) for i, s in enumerate(nodes) for d in nodes[i + 1:]]
    if len(pairs) > max_pairs:
        pairs = sorted(random.Random(seed).sample(pairs, max_pairs))
    prim, back, base = [], [], []
    rng = random.Random(cfg.seed)
    for s, d in pairs:
        sp = baseline.shortest_path(graph, s, d, "hops")
        if sp is None:
            continue
        plan = solve_demand(graph, FlowDemand(s, d, 1.0), cfg, rng)
        if plan is None:
            continue
        base.append(sp.hops)
        prim.append(plan.primary.hops)
        if plan.backup is not None:
            back.append(plan.backup.hops)
    return HopRow(
        graph.name,
        len(nodes),
        graph.num_undirected_links,
        len(prim),
        statistics.fmean(prim),
        statistics.fmean(back) if back else None,
        statistics.fmean(base),
    )


def load_zoo(directory: str | Path, min_links: int = 5, max_links: int = 250, warnings: list | None = None):
    """GraphML files in ``directory`` whose undirected link count is in range."""
    out = []
    defaults = LinkAttributes(4.5e6)
    for path in sorted(Path(directory).glob("*.graphml")):
        try:
            g = load_graphml(path.read_text(), defaults)
        except (OSError, TopologyError) as e:
            msg = f"skipped {path.name}: {e}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            continue
        if not g.name:
            g.name = path.stem
        if min_links <= g.num_undirected_links <= max_links:
            out.append(g)
    return out
