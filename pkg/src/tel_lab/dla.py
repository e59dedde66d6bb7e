"""Path selection with distributed learning automata.

One automaton sits on every node; its actions are the node's outgoing
neighbors. A walk from source to destination samples one action per hop,
the resulting path is scored, and paths that match or beat the incumbent
reinforce the actions that produced them. Every improving path is logged so
that the runner-up can serve as a pre-installed backup.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field

from .topology import CapacityPolicy, Link, NetworkGraph, UnknownLinkError

EPS = 1e-9


class InvariantViolation(RuntimeError):
    """Internal state broke a guarantee that pruning should have provided."""


@dataclass(frozen=True)
class CostCoefficients:
    """Per-link cost weights (utilization, steering cost, delay) and the
    objective weights on delay and cost. All default to 1."""

    alpha: float = 1.0
    lambda_: float = 1.0
    zeta: float = 1.0
    beta: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "lambda_", "zeta", "beta", "theta"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class FlowDemand:
    """A traffic request. Rate in bit/s, max_delay and start in ms, size in bytes."""

    src: str
    dst: str
    rate: float
    max_delay: float = math.inf
    traffic_class: str = "non-responsive"
    size: float | None = None
    start: float = 0.0

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"demand source equals destination ({self.src!r})")
        if self.rate <= 0:
            raise ValueError(f"demand rate must be positive, got {self.rate}")
        if self.max_delay <= 0:
            raise ValueError("max_delay must be positive")
        if self.traffic_class not in ("responsive", "non-responsive"):
            raise ValueError(f"unknown traffic class {self.traffic_class!r}")

    def to_dict(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "rate": self.rate,
            "max_delay": None if math.isinf(self.max_delay) else self.max_delay,
            "traffic_class": self.traffic_class,
            "size": self.size,
            "start": self.start,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FlowDemand:
        max_delay = d.get("max_delay")
        return cls(
            src=d["src"],
            dst=d["dst"],
            rate=float(d["rate"]),
            max_delay=math.inf if max_delay is None else float(max_delay),
            traffic_class=d.get("traffic_class", "non-responsive"),
            size=d.get("size"),
            start=float(d.get("start", 0.0)),
        )


@dataclass(frozen=True)
class PathCandidate:
    nodes: tuple[str, ...]
    value: float = 0.0

    @property
    def links(self) -> list[Link]:
        return list(zip(self.nodes, self.nodes[1:]))

    @property
    def hops(self) -> int:
        return max(len(self.nodes) - 1, 0)

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "value": self.value}


@dataclass
class PathPlan:
    demand: FlowDemand
    primary: PathCandidate
    backup: PathCandidate | None = None
    exploration_log: list[PathCandidate] = field(default_factory=list)
    flow_set_id: int | None = None
    flow_set_width: int | None = None

    def to_dict(self) -> dict:
        return {
            "demand": self.demand.to_dict(),
            "primary": self.primary.to_dict(),
            "backup": self.backup.to_dict() if self.backup else None,
            "log_size": len(self.exploration_log),
            "flow_set_id": self.flow_set_id,
            "flow_set_width": self.flow_set_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PathPlan:
        def cand(c):
            return PathCandidate(tuple(c["nodes"]), c["value"]) if c else None

        return cls(
            demand=FlowDemand.from_dict(d["demand"]),
            primary=cand(d["primary"]),
            backup=cand(d.get("backup")),
            flow_set_id=d.get("flow_set_id"),
            flow_set_width=d.get("flow_set_width"),
        )


@dataclass(frozen=True)
class SolverConfig:
    iterations_I: int = 100
    k_paths: int = 1
    seed: int = 0
    coefficients: CostCoefficients = CostCoefficients()
    capacity_policy: CapacityPolicy = CapacityPolicy()
    reward_a: float = 0.2
    # carried for completeness; the update scheme is reward-inaction
    penalty_b: float = 0.2

    def __post_init__(self):
        if self.iterations_I < 1:
            raise ValueError("iterations_I must be >= 1")
        if self.k_paths < 1:
            raise ValueError("k_paths must be >= 1")
        if not 0 <= self.reward_a <= 1 or not 0 <= self.penalty_b <= 1:
            raise ValueError("reward/penalty parameters must lie in [0, 1]")


# -- automata -----------------------------------------------------------------


@dataclass
class LearningAutomaton:
    actions: list[str]
    probabilities: list[float]
    enabled: list[bool]
    reward_a: float = 0.2
    penalty_b: float = 0.2

    @classmethod
    def uniform(cls, actions: list[str], reward_a: float = 0.2, penalty_b: float = 0.2):
        n = len(actions)
        return cls(list(actions), [1.0 / n] * n, [True] * n, reward_a, penalty_b)

    def enable_all(self) -> None:
        self.enabled = [True] * len(self.actions)

    def reward(self, i: int, a: float | None = None) -> None:
        """Reinforce action ``i``.

        The chosen action moves towards 1 and every other enabled action
        shrinks by (1 - a). Disabled actions keep their probability; the live
        part is rescaled so that the vector stays on the simplex.
        """
        a = self.reward_a if a is None else a
        p = self.probabilities
        if not 0 <= i < len(p):
            raise InvariantViolation(f"action index {i} out of range")
        frozen = 0.0
        for j in range(len(p)):
            if j == i:
                p[j] = p[j] + a * (1.0 - p[j])
            elif self.enabled[j]:
                p[j] = (1.0 - a) * p[j]
            else:
                frozen += p[j]
        live = sum(p) - frozen
        target = 1.0 - frozen
        if live > 0 and abs(live - target) > 0:
            scale = target / live
            for j in range(len(p)):
                if j == i or self.enabled[j]:
                    p[j] *= scale

    def sample(self, allowed: list[int], rng: random.Random) -> int:
        """Draw one of ``allowed`` with probability proportional to its weight."""
        weights = [self.probabilities[j] for j in allowed]
        total = sum(weights)
        if total <= 0:
            return allowed[int(rng.random() * len(allowed))]
        u = rng.random() * total
        acc = 0.0
        for j, w in zip(allowed, weights):
            acc += w
            if u < acc:
                return j
        return allowed[-1]


@dataclass
class DlaGraph:
    automata: dict[str, LearningAutomaton]
    touched: set[str] = field(default_factory=set)

    def enable_all(self) -> None:
        for n in self.touched:
            self.automata[n].enable_all()
        self.touched.clear()


def init_dla(graph: NetworkGraph, reward_a: float = 0.2, penalty_b: float = 0.2) -> DlaGraph:
    if len(graph) == 0:
        raise ValueError("cannot build automata for an empty graph")
    automata = {}
    for n in graph.nodes:
        nbrs = graph.neighbors(n)
        if nbrs:
            automata[n] = LearningAutomaton.uniform(nbrs, reward_a, penalty_b)
        else:
            automata[n] = LearningAutomaton([], [], [], reward_a, penalty_b)
    return DlaGraph(automata)


def reward_path(dla: DlaGraph, path: PathCandidate, a: float) -> DlaGraph:
    for n, m in path.links:
        la = dla.automata[n]
        try:
            i = la.actions.index(m)
        except ValueError:
            raise InvariantViolation(f"{m!r} is not an action of {n!r}") from None
        la.reward(i, a)
    return dla


# -- scoring ------------------------------------------------------------------


def link_cost(graph: NetworkGraph, n: str, m: str, coeffs: CostCoefficients) -> float:
    a = graph.link(n, m)
    util = (a.bandwidth - a.residual_bandwidth) / a.bandwidth
    return coeffs.alpha * util + coeffs.lambda_ * a.cost + coeffs.zeta * a.delay


def evaluate_path(graph: NetworkGraph, path: PathCandidate, coeffs: CostCoefficients) -> float:
    """Summed per-link cost; lower is better."""
    return sum(link_cost(graph, n, m, coeffs) for n, m in path.links)


def path_delay(graph: NetworkGraph, nodes: tuple[str, ...]) -> float:
    return sum(graph.link(n, m).delay for n, m in zip(nodes, nodes[1:]))


# -- exploration --------------------------------------------------------------


def explore_path(
    dla: DlaGraph,
    graph: NetworkGraph,
    s: str,
    d: str,
    rng: random.Random,
    rate: float = 0.0,
    policy: CapacityPolicy = CapacityPolicy(),
    stats: Counter | None = None,
) -> PathCandidate | None:
    """One randomized walk from ``s`` to ``d``; None on a dead end.

    Actions traversed during the walk, and actions whose link cannot carry
    ``rate``, are disabled on the automata. The caller re-enables them once
    the iteration is scored.
    """
    if s == d:
        raise ValueError("source equals destination")
    if not graph.has_node(s) or not graph.has_node(d):
        raise UnknownLinkError(f"unknown endpoint in ({s!r}, {d!r})")
    walk = [s]
    on_walk = {s}
    cap = len(graph) ** 2
    selections = backtracks = 0
    while walk:
        cur = walk[-1]
        if cur == d:
            break
        la = dla.automata[cur]
        dla.touched.add(cur)
        allowed = []
        for j, nb in enumerate(la.actions):
            if not la.enabled[j]:
                continue
            # no spare capacity, or a host that is not the destination
            if policy.available(graph.links[(cur, nb)]) < rate - EPS or (
                nb != d and graph.is_host(nb)
            ):
                la.enabled[j] = False
                continue
            if nb in on_walk:
                continue
            allowed.append(j)
        if not allowed:
            walk.pop()
            on_walk.discard(cur)
            backtracks += 1
            continue
        selections += 1
        if selections + backtracks > cap:
            walk = []
            break
        j = la.sample(allowed, rng)
        la.enabled[j] = False
        walk.append(la.actions[j])
        on_walk.add(la.actions[j])
    if stats is not None:
        stats["selections"] += selections
        stats["backtracks"] += backtracks
        stats["walks"] += 1
        if not walk:
            stats["dead_ends"] += 1
    if not walk:
        return None
    return PathCandidate(tuple(walk))


def choose_backup(log: list[PathCandidate], primary: PathCandidate) -> PathCandidate | None:
    """Best-ranked logged path that is link-disjoint from the primary, falling
    back to the best one that differs from it in at least one link."""
    primary_links = set(primary.links)
    others = [c for c in log if set(c.links) != primary_links]
    for c in others:
        if primary_links.isdisjoint(c.links):
            return c
    return others[0] if others else None


def update_bandwidth(graph: NetworkGraph, path: PathCandidate, rate: float) -> NetworkGraph:
    """Consume ``rate`` on every directed link of ``path`` (in place)."""
    for n, m in path.links:
        a = graph.link(n, m)
        if a.residual_bandwidth < rate - EPS:
            raise InvariantViolation(
                f"residual {a.residual_bandwidth} on ({n!r}, {m!r}) below rate {rate}"
            )
        a.residual_bandwidth = max(a.residual_bandwidth - rate, 0.0)
    return graph


def solve_demand(
    graph: NetworkGraph,
    demand: FlowDemand,
    cfg: SolverConfig,
    rng: random.Random,
    stats: Counter | None = None,
) -> PathPlan | None:
    """Run the exploration loop for one demand against the current residuals."""
    dla = init_dla(graph, cfg.reward_a, cfg.penalty_b)
    best_value = math.inf
    log: list[PathCandidate] = []
    for _ in range(cfg.iterations_I):
        walk = explore_path(
            dla, graph, demand.src, demand.dst, rng,
            rate=demand.rate, policy=cfg.capacity_policy, stats=stats,
        )
        if walk is not None and path_delay(graph, walk.nodes) <= demand.max_delay:
            value = evaluate_path(graph, walk, cfg.coefficients)
            if value <= best_value:
                best_value = value
                cand = PathCandidate(walk.nodes, value)
                reward_path(dla, cand, cfg.reward_a)
                log.insert(0, cand)
        dla.enable_all()
    if not log:
        return None
    ranked: list[PathCandidate] = []
    seen = set()
    for c in log:
        if c.nodes not in seen:
            seen.add(c.nodes)
            ranked.append(c)
    primary = ranked[0]
    return PathPlan(
        demand=demand,
        primary=primary,
        backup=choose_backup(ranked, primary),
        exploration_log=ranked,
    )


def select_paths(
    graph: NetworkGraph,
    demands: list[FlowDemand],
    cfg: SolverConfig,
    stats: Counter | None = None,
) -> list[PathPlan | None]:
    """Solve demands in order, packing each primary before the next demand.

    The input graph is not modified. Infeasible demands yield None in the
    corresponding position.
    """
    if len(demands) != cfg.k_paths:
        raise ValueError(f"expected {cfg.k_paths} demands, got {len(demands)}")
    work = graph.copy()
    rng = random.Random(cfg.seed)
    plans: list[PathPlan | None] = []
    for demand in demands:
        for end in (demand.src, demand.dst):
            if not work.has_node(end):
                raise UnknownLinkError(f"demand endpoint {end!r} not in graph")
        plan = solve_demand(work, demand, cfg, rng, stats)
        if plan is not None:
            update_bandwidth(work, plan.primary, demand.rate)
        plans.append(plan)
    return plans
