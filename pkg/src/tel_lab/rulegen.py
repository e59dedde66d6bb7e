"""Compile path plans into two match-action tables plus a status register.

table 1: (src address, dst address) -> set flow_set
table 2: (flow_set, path_status bit) -> forward(egress port, next-hop MAC)

Primary rules match status 0 and backup rules match status 1. Both families
are installed up front, so failover only flips register bits.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable

from .dla import PathCandidate, PathPlan
from .topology import Link, NetworkGraph

EGRESS_PORT_BITS = 9
MAC_BITS = 48
STATUS_BITS = 1


class RuleError(RuntimeError):
    pass


class CapacityExceeded(RuleError):
    pass


def flow_set_width(count: int) -> int:
    return max(1, math.ceil(math.log2(count))) if count > 1 else 1


def host_address(graph: NetworkGraph, node: str) -> str:
    i = graph.node_index(node)
    return f"10.0.{i // 254}.{i % 254 + 1}"


def node_mac(graph: NetworkGraph, node: str) -> int:
    # locally administered unicast prefix 02:00
    return (0x02 << 40) | graph.node_index(node)


def format_mac(value: int) -> str:
    return ":".join(f"{(value >> s) & 0xFF:02x}" for s in range(40, -8, -8))


@dataclass(frozen=True)
class TableEntry:
    table: int
    match: tuple
    action: tuple

    def sort_key(self):
        return (self.table, tuple(str(x) for x in self.match))

    def to_dict(self, switch: str) -> dict:
        if self.table == 1:
            match = {"src": self.match[0], "dst": self.match[1]}
            action = {"name": "set_flow_set", "flow_set": self.action[1], "width": self.action[2]}
        else:
            match = {"flow_set": self.match[0], "path_status": self.match[1]}
            action = {
                "name": "forward",
                "egress_port": self.action[1],
                "next_hop_mac": format_mac(self.action[2]),
            }
        return {"switch": switch, "table": self.table, "match": match, "action": action}


@dataclass
class PathStatusRegister:
    size: int = 0
    bits: dict[int, int] = field(default_factory=dict)

    def get(self, flow_set: int) -> int:
        return self.bits.get(flow_set, 0)

    def image(self) -> str:
        value = sum(1 << i for i, b in self.bits.items() if b)
        return f"{value:0{max(1, math.ceil(self.size / 4))}x}"


@dataclass
class SwitchRuleSet:
    switch: str
    entries: list[TableEntry] = field(default_factory=list)
    register: PathStatusRegister = field(default_factory=PathStatusRegister)

    def add(self, entry: TableEntry) -> None:
        for e in self.entries:
            if e.table == entry.table and e.match == entry.match:
                if e == entry:
                    return
                raise RuleError(f"conflicting entries on {self.switch}: {e} vs {entry}")
        self.entries.append(entry)

    def canonicalize(self) -> None:
        self.entries.sort(key=TableEntry.sort_key)

    def flow_sets(self) -> set[int]:
        return {e.match[0] for e in self.entries if e.table == 2}

    def lookup(self, table: int, match: tuple) -> TableEntry | None:
        for e in self.entries:
            if e.table == table and e.match == match:
                return e
        return None


def assign_flow_set_ids(plans: list[PathPlan], capacity: int | None = None) -> list[PathPlan]:
    """Number plans 0..k-1. ``capacity`` fixes the id space (and so the width)."""
    if not plans:
        raise ValueError("no plans to number")
    k = len(plans)
    space = k if capacity is None else capacity
    if k > space:
        raise CapacityExceeded(f"{k} plans exceed flow_set capacity {space}")
    width = flow_set_width(space)
    return [replace(p, flow_set_id=i, flow_set_width=width) for i, p in enumerate(plans)]


def _hop_entries(graph, plan: PathPlan, path: PathCandidate, status: int, out: dict):
    src = host_address(graph, plan.demand.src)
    dst = host_address(graph, plan.demand.dst)
    fs = plan.flow_set_id
    for n, nxt in path.links:
        if graph.is_host(n):
            continue
        if not graph.has_link(n, nxt):
            raise RuleError(f"next hop {nxt!r} is not adjacent to {n!r}")
        rs = out.setdefault(n, SwitchRuleSet(n))
        rs.add(TableEntry(1, (src, dst), ("set_flow_set", fs, plan.flow_set_width)))
        rs.add(TableEntry(2, (fs, status), ("forward", graph.port_of(n, nxt), node_mac(graph, nxt))))


def generate_rules(graph: NetworkGraph, plan: PathPlan, include_backup: bool = True) -> list[SwitchRuleSet]:
    if plan.flow_set_id is None:
        raise RuleError("plan has no flow_set id; call assign_flow_set_ids first")
    out: dict[str, SwitchRuleSet] = {}
    _hop_entries(graph, plan, plan.primary, 0, out)
    if include_backup and plan.backup is not None:
        _hop_entries(graph, plan, plan.backup, 1, out)
    for rs in out.values():
        rs.canonicalize()
    return [out[n] for n in sorted(out)]


def compile_plans(graph: NetworkGraph, plans: Iterable[PathPlan | None]) -> dict[str, SwitchRuleSet]:
    """Merge per-plan rules into one rule set per switch, registers zeroed."""
    plans = [p for p in plans if p is not None]
    merged: dict[str, SwitchRuleSet] = {}
    for plan in plans:
        for rs in generate_rules(graph, plan):
            tgt = merged.setdefault(rs.switch, SwitchRuleSet(rs.switch))
            for e in rs.entries:
                tgt.add(e)
    size = len(plans)
    for rs in merged.values():
        rs.canonicalize()
        rs.register = PathStatusRegister(size, {fs: 0 for fs in sorted(rs.flow_sets())})
    return {n: merged[n] for n in sorted(merged)}


def apply_failure_to_rules(rulesets: dict[str, SwitchRuleSet], failed_ids: Iterable[int]) -> dict[str, SwitchRuleSet]:
    """Copy of ``rulesets`` with the status bit of each failed id set to 1."""
    failed = set(failed_ids)
    installed = set().union(*(rs.flow_sets() for rs in rulesets.values())) if rulesets else set()
    unknown = failed - installed
    if unknown:
        raise KeyError(f"flow_set ids not installed: {sorted(unknown)}")
    out = copy.deepcopy(rulesets)
    for rs in out.values():
        for fs in failed & rs.flow_sets():
            rs.register.bits[fs] = 1
    return out


def rule_delta(graph: NetworkGraph, plan: PathPlan) -> dict[str, int]:
    """Extra entries per switch caused by installing the plan's backup."""
    with_b = {rs.switch: len(rs.entries) for rs in generate_rules(graph, plan, True)}
    without = {rs.switch: len(rs.entries) for rs in generate_rules(graph, plan, False)}
    return {sw: n - without.get(sw, 0) for sw, n in with_b.items() if n != without.get(sw, 0)}


# -- memory accounting ----------------------------------------------------------


def divergence_switch(plan: PathPlan) -> str | None:
    """First node whose next hop differs between primary and backup."""
    if plan.backup is None:
        return None
    nxt_backup = dict(plan.backup.links)
    for n, m in plan.primary.links:
        if n in nxt_backup and nxt_backup[n] != m:
            return n
    return None


def _uses(path: PathCandidate, failed: set[Link]) -> bool:
    return any(l in failed or (l[1], l[0]) in failed for l in path.links)


@dataclass
class MemoryRow:
    switch: str
    base_bits: int
    extra_bits: int

    @property
    def total_bits(self) -> int:
        return self.base_bits + self.extra_bits


@dataclass
class MemoryReport:
    rows: list[MemoryRow]
    affected_per_failure: list[int]

    def row(self, switch: str) -> MemoryRow:
        return next(r for r in self.rows if r.switch == switch)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["switch", "base_bits", "extra_bits"])
        for r in self.rows:
            w.writerow([r.switch, r.base_bits, r.extra_bits])
        return buf.getvalue()


def memory_cost(
    plans: list[PathPlan],
    failures: list[Iterable[Link]],
    switches: Iterable[str] | None = None,
) -> MemoryReport:
    """Per-switch register/metadata bits.

    Every switch keeps a flow_set id plus one status bit. For each failure,
    each affected plan costs its divergence switch a new egress port and a
    next-hop MAC. ``switches`` defaults to every node on any path; pass
    ``graph.switches`` to leave hosts out.
    """
    plans = [p for p in plans if p is not None]
    width = max((p.flow_set_width or flow_set_width(len(plans)) for p in plans), default=1)
    base = width + STATUS_BITS
    if switches is None:
        switches = set()
        for p in plans:
            for path in (p.primary, p.backup):
                if path is not None:
                    switches.update(path.nodes)
    extra: dict[str, int] = defaultdict(int)
    affected = []
    for failure in failures:
        failed = set(failure)
        hit = set()
        for p in plans:
            if _uses(p.primary, failed):
                sw = divergence_switch(p)
                if sw is not None:
                    hit.add(sw)
                    extra[sw] += EGRESS_PORT_BITS + MAC_BITS
        affected.append(len(hit))
    names = sorted(set(switches) | set(extra))
    return MemoryReport([MemoryRow(sw, base, extra.get(sw, 0)) for sw in names], affected)


# -- export -------------------------------------------------------------------


def rules_jsonl(rulesets: dict[str, SwitchRuleSet]) -> str:
    lines = []
    for sw in sorted(rulesets):
        for e in rulesets[sw].entries:
            lines.append(json.dumps(e.to_dict(sw), sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def registers_json(rulesets: dict[str, SwitchRuleSet]) -> list[dict]:
    return [{"switch": sw, "bits": rulesets[sw].register.image()} for sw in sorted(rulesets)]
