"""Behavioral switch model and a deterministic fluid flow simulator.

Time is in milliseconds and advances in fixed ticks. On every tick the route
of each active flow is resolved hop by hop (through the compiled tables in
TEL mode, from the installed shortest path in baseline mode), link capacity
is shared max-min fairly, and delivered bytes are charged to the egress
counters that the probe cycle reads.
"""

from __future__ import annotations

import csv
import heapq
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import baseline
from .dla import FlowDemand, PathPlan
from .rulegen import SwitchRuleSet, apply_failure_to_rules, host_address
from .topology import Link, NetworkGraph, UnknownLinkError

log = logging.getLogger(__name__)

EPS = 1e-9


class SimulationInvariantError(RuntimeError):
    pass


# -- switch model ---------------------------------------------------------------


@dataclass(frozen=True)
class ForwardDecision:
    drop: bool
    egress_port: int | None = None
    next_hop_mac: int | None = None
    flow_set: int | None = None
    status: int | None = None


DROP = ForwardDecision(True)


class SwitchState:
    """Installed rules plus per-egress byte counters and probe timestamps."""

    def __init__(self, ruleset: SwitchRuleSet):
        self.counters: dict[int, float] = defaultdict(float)
        self.last_probe: dict[int, float] = {}
        self.install(ruleset)

    def install(self, ruleset: SwitchRuleSet) -> None:
        self.ruleset = ruleset
        self._t1 = {e.match: e for e in ruleset.entries if e.table == 1}
        self._t2 = {e.match: e for e in ruleset.entries if e.table == 2}


def forward(state: SwitchState, header: tuple[str, str]) -> ForwardDecision:
    """table 1 on (src, dst), register read, then table 2 on (flow_set, status)."""
    e1 = state._t1.get(tuple(header))
    if e1 is None:
        return DROP
    fs = e1.action[1]
    status = state.ruleset.register.get(fs)
    e2 = state._t2.get((fs, status))
    if e2 is None:
        return ForwardDecision(True, flow_set=fs, status=status)
    return ForwardDecision(False, e2.action[1], e2.action[2], fs, status)


# -- fluid model ----------------------------------------------------------------


def max_min_allocation(
    routes: dict[int, list[Link]],
    caps: dict[int, float],
    capacity: dict[Link, float],
) -> dict[int, float]:
    """Progressive filling: raise all unfrozen flows together until each one
    hits its demand cap or crosses a saturated link."""
    rate = {f: 0.0 for f in routes}
    active = {f for f in routes if caps[f] > EPS}
    users: dict[Link, set[int]] = defaultdict(set)
    for f in active:
        for l in routes[f]:
            users[l].add(f)
    remaining = {l: capacity[l] for l in users}
    while active:
        inc = min(caps[f] - rate[f] for f in active)
        for l, fs in users.items():
            if fs:
                inc = min(inc, remaining[l] / len(fs))
        inc = max(inc, 0.0)
        for f in active:
            rate[f] += inc
        saturated = set()
        for l, fs in users.items():
            if fs:
                remaining[l] -= inc * len(fs)
                if remaining[l] <= EPS * capacity[l]:
                    saturated.add(l)
        frozen = {
            f for f in active
            if caps[f] - rate[f] <= EPS * caps[f] or any(l in saturated for l in routes[f])
        }
        if not frozen:  # numerical safety; cannot happen in exact arithmetic
            break
        active -= frozen
        for f in frozen:
            for l in routes[f]:
                users[l].discard(f)
    return rate


@dataclass
class SimConfig:
    duration: float = 10_000.0
    tick: float = 10.0
    detection_delay: float = 50.0
    control_plane_delay: float = 1000.0
    probe_interval: float = 1000.0
    report_interval: float = 100.0
    baseline_metric: str = "hops"

    def __post_init__(self):
        if self.tick <= 0 or self.duration <= 0:
            raise ValueError("tick and duration must be positive")
        if self.detection_delay < 0 or self.control_plane_delay < 0:
            raise ValueError("delays must be non-negative")


@dataclass(frozen=True)
class FailureEvent:
    link: Link
    time: float
    detection_delay: float | None = None

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("failure time must be >= 0")
        if self.detection_delay is not None and self.detection_delay < 0:
            raise ValueError("detection_delay must be >= 0")

    def to_dict(self) -> dict:
        return {"link": list(self.link), "time": self.time, "detection_delay": self.detection_delay}

    @classmethod
    def from_dict(cls, d: dict) -> FailureEvent:
        return cls(tuple(d["link"]), float(d["time"]), d.get("detection_delay"))


@dataclass(frozen=True)
class ProbeRecord:
    link: Link
    bytes_since_last: float
    previous_timestamp: float
    current_timestamp: float

    @property
    def rate_bps(self) -> float:
        return 8.0 * self.bytes_since_last / ((self.current_timestamp - self.previous_timestamp) / 1000.0)


@dataclass
class SimMetrics:
    mode: str
    duration: float
    report_interval: float
    throughput: list[tuple[float, int, float]] = field(default_factory=list)
    fct: dict[int, float] = field(default_factory=dict)
    delivered_bytes: dict[int, float] = field(default_factory=dict)
    offered_bytes: dict[int, float] = field(default_factory=dict)
    utilization: list[tuple[float, Link, float]] = field(default_factory=list)
    outages: dict[int, list[tuple[float, float | None]]] = field(default_factory=dict)
    route_log: dict[int, list[tuple[float, tuple[str, ...] | None]]] = field(default_factory=dict)
    disconnected: set[int] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)

    @property
    def total_delivered(self) -> float:
        return sum(self.delivered_bytes.values())

    @property
    def lost_bytes(self) -> dict[int, float]:
        return {f: self.offered_bytes[f] - self.delivered_bytes[f] for f in self.offered_bytes}

    def recovery_time(self, flow: int) -> float | None:
        """End of the flow's first outage, None if it never recovered."""
        spans = self.outages.get(flow)
        return spans[0][1] if spans else None

    def mean_throughput(self, flows: Iterable[int] | None = None) -> float:
        """Average over flows of delivered bits per second of simulated time."""
        flows = list(self.delivered_bytes if flows is None else flows)
        if not flows:
            return 0.0
        return sum(8 * self.delivered_bytes[f] for f in flows) / (self.duration / 1000) / len(flows)

    def throughput_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "flow_id", "bps"])
        w.writerows((f"{t:g}", f, f"{bps:.6f}") for t, f, bps in self.throughput)
        return buf.getvalue()

    def fct_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["flow_id", "fct_ms"])
        w.writerows((f, f"{v:.6f}" if math.isfinite(v) else "inf") for f, v in sorted(self.fct.items()))
        return buf.getvalue()

    def utilization_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "src", "dst", "utilization"])
        w.writerows((f"{t:g}", l[0], l[1], f"{u:.9f}") for t, l, u in self.utilization)
        return buf.getvalue()


Rerouter = Callable[..., "baseline.PathCandidate | None"]


class FlowSimulator:
    """One simulation run in either ``tel`` or ``baseline`` mode."""

    def __init__(
        self,
        graph: NetworkGraph,
        plans: list[PathPlan | None],
        rulesets: dict[str, SwitchRuleSet],
        demands: list[FlowDemand],
        config: SimConfig = SimConfig(),
        mode: str = "tel",
        rerouter: Rerouter = baseline.reroute_after_failure,
    ):
        if mode not in ("tel", "baseline"):
            raise ValueError(f"unknown mode {mode!r}")
        if len(plans) != len(demands):
            raise ValueError("plans and demands must align")
        self.graph = graph
        self.plans = plans
        self.rulesets = rulesets
        self.demands = demands
        self.cfg = config
        self.mode = mode
        self.rerouter = rerouter
        self.now = 0.0
        self.down: set[Link] = set()
        self._events: list = []
        self._seq = 0
        self._epoch = 0
        self._route_cache: dict[int, tuple[int, tuple[str, ...] | None]] = {}
        self.switches = {
            sw: SwitchState(rulesets.get(sw, SwitchRuleSet(sw))) for sw in graph.switches
        }
        self._host_counters: dict[Link, float] = defaultdict(float)
        self._host_last_probe: dict[Link, float] = {}
        self._port_to_node = {
            sw: {graph.port_of(sw, nb): nb for nb in graph.neighbors(sw)} for sw in graph.switches
        }
        self._headers = [
            (host_address(graph, d.src), host_address(graph, d.dst)) for d in demands
        ]
        self.metrics = SimMetrics(mode, config.duration, config.report_interval)
        self.base_routes: dict[int, tuple[str, ...] | None] = {}
        if mode == "baseline":
            for f, d in enumerate(demands):
                p = baseline.shortest_path(graph, d.src, d.dst, config.baseline_metric)
                self.base_routes[f] = p.nodes if p else None

    # -- events -------------------------------------------------------------

    def _schedule(self, time: float, kind: str, payload) -> None:
        heapq.heappush(self._events, (time, self._seq, kind, payload))
        self._seq += 1

    def inject_failure(self, event: FailureEvent) -> FlowSimulator:
        n, m = event.link
        if not self.graph.has_link(n, m):
            raise UnknownLinkError(f"cannot fail unknown link {event.link!r}")
        if event.time > self.cfg.duration:
            raise ValueError(f"failure at {event.time} ms is after the end of the run")
        self._schedule(event.time, "down", event)
        return self

    def _affected_plans(self, link: Link) -> list[int]:
        rev = (link[1], link[0])
        out = []
        for f, plan in enumerate(self.plans):
            if plan is not None and any(l in (link, rev) for l in plan.primary.links):
                out.append(f)
        return out

    def _process_events(self, upto: float) -> None:
        while self._events and self._events[0][0] <= upto + EPS:
            time, _, kind, payload = heapq.heappop(self._events)
            if kind == "down":
                n, m = payload.link
                if (n, m) in self.down:
                    msg = f"t={time:g}: link ({n}, {m}) already failed; ignored"
                    log.warning(msg)
                    self.metrics.warnings.append(msg)
                    continue
                self.down.update({(n, m), (m, n)})
                self._epoch += 1
                det = self.cfg.detection_delay if payload.detection_delay is None else payload.detection_delay
                if self.mode == "tel":
                    self._schedule(time + det, "flip", (n, m))
                else:
                    self._schedule(time + det + self.cfg.control_plane_delay, "reroute", (n, m))
            elif kind == "flip":
                ids = [self.plans[f].flow_set_id for f in self._affected_plans(payload)]
                if ids:
                    self.rulesets = apply_failure_to_rules(self.rulesets, ids)
                    for sw, rs in self.rulesets.items():
                        self.switches[sw].install(rs)
                self._epoch += 1
            elif kind == "reroute":
                for f, route in self.base_routes.items():
                    if route is None or not self._route_ok(route):
                        d = self.demands[f]
                        p = self.rerouter(self.graph, sorted(self.down), d.src, d.dst, self.cfg.baseline_metric)
                        self.base_routes[f] = p.nodes if p else None
                self._epoch += 1

    # -- routing ------------------------------------------------------------

    def _route_ok(self, route: tuple[str, ...]) -> bool:
        return not any(l in self.down for l in zip(route, route[1:]))

    def _tel_route(self, f: int) -> tuple[str, ...] | None:
        d = self.demands[f]
        if self.plans[f] is None:
            return None
        header = self._headers[f]
        node = d.src
        path = [node]
        if self.graph.is_host(node):
            nxt = self.graph.host_switch[node]
            if (node, nxt) in self.down:
                return None
            node = nxt
            path.append(node)
        while node != d.dst:
            if len(path) > len(self.graph) + 1:
                return None
            state = self.switches.get(node)
            if state is None:
                return None
            dec = forward(state, header)
            if dec.drop:
                return None
            nxt = self._port_to_node[node].get(dec.egress_port)
            if nxt is None or (node, nxt) in self.down:
                return None
            node = nxt
            path.append(node)
        return tuple(path)

    def route(self, f: int) -> tuple[str, ...] | None:
        cached = self._route_cache.get(f)
        if cached is not None and cached[0] == self._epoch:
            return cached[1]
        if self.mode == "tel":
            r = self._tel_route(f)
        else:
            r = self.base_routes.get(f)
            if r is not None and not self._route_ok(r):
                r = None
        self._route_cache[f] = (self._epoch, r)
        return r

    # -- monitoring ---------------------------------------------------------

    def _counter(self, link: Link) -> tuple[dict, dict, object]:
        n, m = link
        if n in self.switches:
            st = self.switches[n]
            return st.counters, st.last_probe, self.graph.port_of(n, m)
        return self._host_counters, self._host_last_probe, link

    def _charge(self, link: Link, nbytes: float) -> None:
        counters, _, key = self._counter(link)
        counters[key] += nbytes

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimMetrics:
        cfg, g, M = self.cfg, self.graph, self.metrics
        n_ticks = int(round(cfg.duration / cfg.tick))
        n_bins = int(math.ceil(cfg.duration / cfg.report_interval))
        probe_every = max(1, int(round(cfg.probe_interval / cfg.tick)))
        bins = [[0.0] * n_bins for _ in self.demands]
        remaining = {f: d.size for f, d in enumerate(self.demands) if d.size is not None}
        first_active: dict[int, float] = {}
        done: set[int] = set()
        blocked_since: dict[int, float] = {}
        last_route: dict[int, object] = {}
        capacity = {l: a.bandwidth for l, a in g.links.items()}
        for f in range(len(self.demands)):
            M.delivered_bytes[f] = 0.0
            M.offered_bytes[f] = 0.0
        monitored = sorted(g.links)
        for l in monitored:
            probe_cycle(self, l)

        for k in range(n_ticks):
            t = k * cfg.tick
            self.now = t
            if k and k % probe_every == 0:
                self._probe_all(monitored)
            self._process_events(t)
            active = [f for f, d in enumerate(self.demands) if d.start <= t + EPS and f not in done]
            routed: dict[int, list[Link]] = {}
            for f in active:
                first_active.setdefault(f, t)
                r = self.route(f)
                if last_route.get(f, ()) != r:
                    M.route_log.setdefault(f, []).append((t, r))
                    last_route[f] = r
                if r is None:
                    blocked_since.setdefault(f, t)
                    continue
                if f in blocked_since:
                    M.outages.setdefault(f, []).append((blocked_since.pop(f), t))
                routed[f] = list(zip(r, r[1:]))
            caps = {f: self.demands[f].rate for f in routed}
            rates = max_min_allocation(routed, caps, capacity)
            self._check_conservation(routed, rates, capacity, t)
            secs = cfg.tick / 1000.0
            for f in active:
                d = self.demands[f]
                rate = rates.get(f, 0.0)
                if d.traffic_class == "non-responsive":
                    M.offered_bytes[f] += d.rate * secs / 8
                else:
                    M.offered_bytes[f] += rate * secs / 8
                sent = rate * secs / 8
                if f in remaining and sent >= remaining[f] - EPS and rate > 0:
                    sent = remaining[f]
                    finish = t + sent * 8 / rate * 1000.0
                    M.fct[f] = finish - first_active[f]
                    done.add(f)
                if f in remaining:
                    remaining[f] -= sent
                if sent <= 0:
                    continue
                M.delivered_bytes[f] += sent
                bins[f][min(int(t // cfg.report_interval), n_bins - 1)] += sent
                for l in routed[f]:
                    self._charge(l, sent)
        self.now = n_ticks * cfg.tick
        self._probe_all(monitored)
        for f, since in blocked_since.items():
            M.outages.setdefault(f, []).append((since, None))
            M.disconnected.add(f)
        for f in remaining:
            M.fct.setdefault(f, math.inf)
        interval_s = cfg.report_interval / 1000.0
        for b in range(n_bins):
            for f, d in enumerate(self.demands):
                if d.start <= b * cfg.report_interval + cfg.report_interval:
                    M.throughput.append((b * cfg.report_interval, f, bins[f][b] * 8 / interval_s))
        return M

    def _probe_all(self, links: list[Link]) -> None:
        for l in links:
            rec, est = probe_cycle(self, l)
            if est is not None:
                self.metrics.utilization.append((self.now, l, est / self.graph.links[l].bandwidth))

    def _check_conservation(self, routed, rates, capacity, t) -> None:
        load: dict[Link, float] = defaultdict(float)
        for f, links in routed.items():
            for l in links:
                load[l] += rates[f]
        for l, v in load.items():
            if v > capacity[l] * (1 + 1e-9):
                raise SimulationInvariantError(f"t={t:g}: load {v} exceeds capacity on {l}")


def probe_cycle(sim: FlowSimulator, link: Link) -> tuple[ProbeRecord | None, float | None]:
    """Read and reset the egress counter of ``link``.

    Returns the probe record and the estimated rate in bit/s; the first
    cycle on a link only records a timestamp and returns (None, None).
    """
    counters, last, key = sim._counter(link)
    now = sim.now
    prev = last.get(key)
    if prev is None:
        last[key] = now
        counters[key] = 0.0
        return None, None
    if now - prev <= 0:
        return None, None
    rec = ProbeRecord(link, counters[key], prev, now)
    counters[key] = 0.0
    last[key] = now
    return rec, rec.rate_bps


def inject_failure(sim: FlowSimulator, event: FailureEvent) -> FlowSimulator:
    return sim.inject_failure(event)


def run_flow_sim(
    graph: NetworkGraph,
    plans: list[PathPlan | None],
    rulesets: dict[str, SwitchRuleSet],
    demands: list[FlowDemand],
    failures: Iterable[FailureEvent] = (),
    duration: float = 10_000.0,
    tick: float = 10.0,
    control_plane_delay: float = 1000.0,
    baseline_mode: bool = False,
    **config,
) -> SimMetrics:
    rerouter = config.pop("rerouter", None)
    cfg = SimConfig(duration=duration, tick=tick, control_plane_delay=control_plane_delay, **config)
    sim = FlowSimulator(
        graph, plans, rulesets, demands, cfg,
        mode="baseline" if baseline_mode else "tel",
        **({"rerouter": rerouter} if rerouter else {}),
    )
    for ev in failures:
        sim.inject_failure(ev)
    return sim.run()
