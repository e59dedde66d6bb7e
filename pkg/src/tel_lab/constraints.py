"""Stateless validators for path placements.

Each check returns its violations as data; an empty list means the placement
satisfies the constraint. They share no code with the solver so that they can
serve as independent oracles in tests.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple

from .topology import CapacityPolicy, Link, NetworkGraph

TOL = 1e-9


@dataclass
class Placement:
    """Per-flow link assignments (the rows of the 0/1 assignment matrix)."""

    links: dict[int, list[Link]] = field(default_factory=dict)
    endpoints: dict[int, tuple[str, str]] = field(default_factory=dict)
    rates: dict[int, float] = field(default_factory=dict)

    def add(self, flow: int, links: Iterable[Link], src: str, dst: str, rate: float) -> None:
        self.links[flow] = list(links)
        self.endpoints[flow] = (src, dst)
        self.rates[flow] = rate

    @classmethod
    def from_paths(cls, paths: dict[int, tuple[str, ...]], rates: dict[int, float]) -> Placement:
        p = cls()
        for f, nodes in paths.items():
            p.add(f, zip(nodes, nodes[1:]), nodes[0], nodes[-1], rates[f])
        return p

    @classmethod
    def from_plans(cls, plans, use_backup: bool = False) -> Placement:
        p = cls()
        for f, plan in enumerate(plans):
            if plan is None:
                continue
            path = plan.backup if use_backup else plan.primary
            if path is None:
                continue
            p.add(f, path.links, plan.demand.src, plan.demand.dst, plan.demand.rate)
        return p


@dataclass
class Violation:
    constraint: str
    flow: int | None
    where: object
    detail: str = ""
    load: float | None = None
    bound: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["where"] = list(self.where) if isinstance(self.where, tuple) else self.where
        return d


class DelayCheck(NamedTuple):
    ok: bool
    total: float


def check_link_capacity(
    graph: NetworkGraph, placement: Placement, policy: CapacityPolicy = CapacityPolicy()
) -> list[Violation]:
    load: dict[Link, float] = defaultdict(float)
    for f, links in placement.links.items():
        for link in links:
            load[link] += placement.rates[f]
    out = []
    for link in sorted(load):
        bound = policy.mu * graph.link(*link).bandwidth
        if load[link] > bound * (1 + TOL):
            out.append(Violation("link_capacity", None, link, "load exceeds bound", load[link], bound))
    return out


def check_flow_conservation(graph: NetworkGraph, placement: Placement) -> list[Violation]:
    out = []
    for f in sorted(placement.links):
        src, dst = placement.endpoints[f]
        net: Counter = Counter()
        for n, m in placement.links[f]:
            net[n] += 1
            net[m] -= 1
        for node in sorted(set(net) | {src, dst}):
            expected = 1 if node == src else -1 if node == dst else 0
            if net[node] != expected:
                out.append(
                    Violation("flow_conservation", f, node, f"net {net[node]}, expected {expected}")
                )
    return out


def check_delay(graph: NetworkGraph, path, t_max: float = math.inf) -> DelayCheck:
    nodes = path.nodes if hasattr(path, "nodes") else tuple(path)
    total = sum(graph.link(n, m).delay for n, m in zip(nodes, nodes[1:]))
    return DelayCheck(total <= t_max, total)


def check_link_once(placement: Placement) -> list[Violation]:
    out = []
    for f in sorted(placement.links):
        links = placement.links[f]
        for link, count in sorted(Counter(links).items()):
            if count > 1:
                out.append(Violation("link_once", f, link, f"link used {count} times"))
        out_degree = Counter(n for n, _ in set(links))
        for node, deg in sorted(out_degree.items()):
            if deg > 1:
                out.append(Violation("link_once", f, node, f"out-degree {deg}"))
    return out


def validate_plans(graph: NetworkGraph, plans, policy: CapacityPolicy = CapacityPolicy()) -> list[Violation]:
    """All four checks over the primaries of ``plans``."""
    placement = Placement.from_plans(plans)
    found = []
    found += check_link_capacity(graph, placement, policy)
    found += check_flow_conservation(graph, placement)
    found += check_link_once(placement)
    for f, plan in enumerate(plans):
        if plan is None:
            continue
        for path in (plan.primary, plan.backup):
            if path is None:
                continue
            res = check_delay(graph, path, plan.demand.max_delay)
            if not res.ok:
                found.append(
                    Violation("delay", f, path.nodes, "delay bound exceeded", res.total, plan.demand.max_delay)
                )
    return found
