"""Declarative scenario files (JSON) and the objects they expand into."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dla import CostCoefficients, FlowDemand, PathPlan, SolverConfig
from .dataplane import FailureEvent, SimConfig
from .topology import (
    CapacityPolicy,
    LinkAttributes,
    NetworkGraph,
    attach_hosts,
    build_simple_topology,
    load_graphml,
)


class ScenarioError(ValueError):
    pass


@dataclass
class LinkDefaults:
    bandwidth: float = 4.5e6
    delay: float = 1.0
    cost: float = 1.0

    def attrs(self) -> LinkAttributes:
        return LinkAttributes(self.bandwidth, self.delay, self.cost)


@dataclass
class RandomDemands:
    """k distinct ordered host pairs drawn with ``seed``."""

    count: int
    seed: int = 0
    rate: float = 1e6
    size: float | None = None
    max_delay: float | None = None
    traffic_class: str = "non-responsive"
    # start times uniform in [0, start_window) ms
    start_window: float = 0.0

    def __post_init__(self):
        if self.count < 1:
            raise ScenarioError(f"demand count must be >= 1, got {self.count}")


@dataclass
class RandomFailures:
    """``count`` distinct switch-to-switch links drawn from the solved primaries."""

    count: int
    time: float
    seed: int = 0
    detection_delay: float | None = None


@dataclass
class SolverSettings:
    iterations: int = 100
    seed: int = 0
    reward_a: float = 0.2
    penalty_b: float = 0.2
    mu: float = 1.0
    coefficients: dict = field(default_factory=lambda: asdict(CostCoefficients()))

    def config(self, k: int, seed_offset: int = 0) -> SolverConfig:
        return SolverConfig(
            iterations_I=self.iterations,
            k_paths=k,
            seed=self.seed + seed_offset,
            coefficients=CostCoefficients(**self.coefficients),
            capacity_policy=CapacityPolicy(self.mu),
            reward_a=self.reward_a,
            penalty_b=self.penalty_b,
        )


@dataclass
class Scenario:
    name: str = "scenario"
    topology: str = "simple"
    attach_hosts: bool = True
    links: LinkDefaults = field(default_factory=LinkDefaults)
    demands: list[FlowDemand] = field(default_factory=list)
    random_demands: RandomDemands | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    failures: list[FailureEvent] = field(default_factory=list)
    random_failures: RandomFailures | None = None
    sim: SimConfig = field(default_factory=SimConfig)
    replicas: int = 1
    outputs: str = "results"
    # directory that relative topology paths resolve against
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if not self.demands and self.random_demands is None:
            raise ScenarioError("scenario has no demands")
        if self.replicas < 1:
            raise ScenarioError("replicas must be >= 1")

    # -- (de)serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "topology": self.topology,
            "attach_hosts": self.attach_hosts,
            "links": asdict(self.links),
            "demands": [d.to_dict() for d in self.demands],
            "random_demands": asdict(self.random_demands) if self.random_demands else None,
            "solver": asdict(self.solver),
            "failures": [f.to_dict() for f in self.failures],
            "random_failures": asdict(self.random_failures) if self.random_failures else None,
            "sim": asdict(self.sim),
            "replicas": self.replicas,
            "outputs": self.outputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> Scenario:
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            sim_d = dict(d.get("sim") or {})
            rf = d.get("random_failures")
            rd = d.get("random_demands")
            return cls(
                name=d.get("name", "scenario"),
                topology=d.get("topology", "simple"),
                attach_hosts=d.get("attach_hosts", True),
                links=LinkDefaults(**(d.get("links") or {})),
                demands=[FlowDemand.from_dict(x) for x in d.get("demands") or []],
                random_demands=RandomDemands(**rd) if rd else None,
                solver=SolverSettings(**(d.get("solver") or {})),
                failures=[FailureEvent.from_dict(x) for x in d.get("failures") or []],
                random_failures=RandomFailures(**rf) if rf else None,
                sim=SimConfig(**sim_d),
                replicas=d.get("replicas", 1),
                outputs=d.get("outputs", "results"),
                base_dir=base_dir,
            )
        except (TypeError, KeyError) as e:
            raise ScenarioError(f"bad scenario field: {e}") from e

    @classmethod
    def from_json(cls, text: str, base_dir: str = ".") -> Scenario:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"scenario is not valid JSON: {e}") from e
        if not isinstance(d, dict):
            raise ScenarioError("scenario must be a JSON object")
        return cls.from_dict(d, base_dir)

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        path = Path(path)
        return cls.from_json(path.read_text(), str(path.parent))

    # -- expansion ----------------------------------------------------------

    def build_graph(self) -> NetworkGraph:
        if self.topology == "simple":
            return build_simple_topology(self.links.bandwidth, self.links.delay, self.links.cost)
        path = Path(self.topology)
        if not path.is_absolute():
            path = Path(self.base_dir) / path
        if not path.exists():
            raise ScenarioError(f"topology file not found: {path}")
        g = load_graphml(path.read_text(), self.links.attrs())
        if self.attach_hosts and not g.hosts:
            g = attach_hosts(g, self.links.attrs())
        return g

    def build_demands(self, graph: NetworkGraph, seed_offset: int = 0) -> list[FlowDemand]:
        if self.demands:
            for d in self.demands:
                if not graph.has_node(d.src) or not graph.has_node(d.dst):
                    raise ScenarioError(f"demand endpoint not in topology: {d.src}->{d.dst}")
            return list(self.demands)
        draw = self.random_demands
        ends = sorted(graph.hosts) or sorted(graph.switches)
        pairs = [(s, d) for s in ends for d in ends if s != d]
        if draw.count > len(pairs):
            raise ScenarioError(f"{draw.count} demands but only {len(pairs)} distinct host pairs")
        rng = random.Random(draw.seed + seed_offset)
        chosen = rng.sample(pairs, draw.count)
        return [
            FlowDemand(
                s, d, draw.rate,
                max_delay=math.inf if draw.max_delay is None else draw.max_delay,
                traffic_class=draw.traffic_class,
                size=draw.size,
                start=rng.uniform(0, draw.start_window) if draw.start_window > 0 else 0.0,
            )
            for s, d in chosen
        ]

    def build_failures(
        self, graph: NetworkGraph, plans: list[PathPlan | None], seed_offset: int = 0
    ) -> list[FailureEvent]:
        if self.random_failures is None:
            return list(self.failures)
        return list(self.failures) + pick_failures(graph, plans, self.random_failures, seed_offset)


def pick_failures(
    graph: NetworkGraph, plans: list[PathPlan | None], draw: RandomFailures, seed_offset: int = 0
) -> list[FailureEvent]:
    """Draw distinct undirected switch links carried by some primary.

    Draws are nested: the first n links for count n+1 equal the draw for n.
    """
    used = set()
    for p in plans:
        if p is None:
            continue
        for n, m in p.primary.links:
            if not graph.is_host(n) and not graph.is_host(m):
                used.add(tuple(sorted((n, m))))
    pool = sorted(used)
    rng = random.Random(draw.seed + seed_offset)
    rng.shuffle(pool)
    if draw.count > len(pool):
        raise ScenarioError(f"cannot fail {draw.count} links; primaries use {len(pool)}")
    return [FailureEvent(link, draw.time, draw.detection_delay) for link in pool[: draw.count]]
