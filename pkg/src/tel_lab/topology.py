"""Network graph model, GraphML loading and the small evaluation topologies."""

from __future__ import annotations

import copy
import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

Link = tuple[str, str]


class TopologyError(ValueError):
    """Base class for graph construction problems."""


class MalformedInputError(TopologyError):
    pass


class ValidationError(TopologyError):
    pass


class UnknownLinkError(KeyError):
    pass


@dataclass
class LinkAttributes:
    """State of one directed link. Bandwidth in bit/s, delay in ms."""

    bandwidth: float
    delay: float = 1.0
    cost: float = 1.0
    residual_bandwidth: float | None = None
    bytes_sent: int = 0
    last_probe_time: float | None = None

    def __post_init__(self):
        if self.residual_bandwidth is None:
            self.residual_bandwidth = self.bandwidth
        if self.bandwidth <= 0:
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.delay < 0 or self.cost < 0:
            raise ValidationError("delay and cost must be non-negative")
        if not 0 <= self.residual_bandwidth <= self.bandwidth:
            raise ValidationError(
                f"residual {self.residual_bandwidth} outside [0, {self.bandwidth}]"
            )

    def fresh(self) -> LinkAttributes:
        return LinkAttributes(self.bandwidth, self.delay, self.cost)


@dataclass(frozen=True)
class CapacityPolicy:
    """Share of every link's bandwidth that engineered traffic may use."""

    mu: float = 1.0

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")

    def available(self, attrs: LinkAttributes) -> float:
        return attrs.residual_bandwidth - (1.0 - self.mu) * attrs.bandwidth


@dataclass
class NetworkGraph:
    """Bi-directed graph: every undirected edge is two directed links.

    Residual bandwidth is tracked per direction. Neighbor order is insertion
    order, which fixes the action order of the learning automata.
    """

    name: str = ""
    labels: dict[str, str] = field(default_factory=dict)
    host_switch: dict[str, str] = field(default_factory=dict)
    links: dict[Link, LinkAttributes] = field(default_factory=dict)
    _adj: dict[str, list[str]] = field(default_factory=dict, repr=False)
    _hosts: set[str] = field(default_factory=set, repr=False)

    # -- construction -----------------------------------------------------

    def add_switch(self, node: str, label: str | None = None) -> None:
        if node in self._adj:
            raise ValidationError(f"duplicate node id {node!r}")
        self._adj[node] = []
        if label is not None:
            self.labels[node] = label

    def add_host(self, node: str, switch: str, attrs: LinkAttributes) -> None:
        if node in self._adj:
            raise ValidationError(f"duplicate node id {node!r}")
        if switch not in self._adj or switch in self._hosts:
            raise ValidationError(f"host {node!r} attached to unknown switch {switch!r}")
        self._adj[node] = []
        self._hosts.add(node)
        self.host_switch[node] = switch
        self.add_link(node, switch, attrs)

    def add_link(self, n: str, m: str, attrs: LinkAttributes) -> None:
        """Add both directions of an undirected edge, each with its own state."""
        if n == m:
            raise ValidationError(f"self-loop on {n!r}")
        for end in (n, m):
            if end not in self._adj:
                raise ValidationError(f"link ({n!r}, {m!r}) references unknown node {end!r}")
        if (n, m) in self.links:
            raise ValidationError(f"duplicate link ({n!r}, {m!r})")
        self.links[(n, m)] = copy.copy(attrs)
        self.links[(m, n)] = copy.copy(attrs)
        self._adj[n].append(m)
        self._adj[m].append(n)

    # -- queries ----------------------------------------------------------

    @property
    def nodes(self) -> list[str]:
        return list(self._adj)

    @property
    def switches(self) -> list[str]:
        return [n for n in self._adj if n not in self._hosts]

    @property
    def hosts(self) -> list[str]:
        return [n for n in self._adj if n in self._hosts]

    def is_host(self, node: str) -> bool:
        return node in self._hosts

    def has_node(self, node: str) -> bool:
        return node in self._adj

    def neighbors(self, node: str) -> list[str]:
        try:
            return self._adj[node]
        except KeyError:
            raise UnknownLinkError(f"unknown node {node!r}") from None

    def link(self, n: str, m: str) -> LinkAttributes:
        try:
            return self.links[(n, m)]
        except KeyError:
            raise UnknownLinkError(f"unknown link ({n!r}, {m!r})") from None

    def has_link(self, n: str, m: str) -> bool:
        return (n, m) in self.links

    def undirected_links(self) -> list[Link]:
        """One (n, m) per edge, in insertion order."""
        seen = set()
        out = []
        for n, m in self.links:
            if (m, n) not in seen:
                seen.add((n, m))
                out.append((n, m))
        return out

    @property
    def num_undirected_links(self) -> int:
        return len(self.links) // 2

    def host_for(self, switch: str) -> str | None:
        for host, sw in self.host_switch.items():
            if sw == switch:
                return host
        return None

    def port_of(self, n: str, m: str) -> int:
        """Egress port number of n towards m (1-based neighbor position)."""
        try:
            return self._adj[n].index(m) + 1
        except (KeyError, ValueError):
            raise UnknownLinkError(f"unknown link ({n!r}, {m!r})") from None

    def node_index(self, node: str) -> int:
        return list(self._adj).index(node)

    def copy(self) -> NetworkGraph:
        return copy.deepcopy(self)

    def validate(self) -> None:
        for (n, m), attrs in self.links.items():
            if n not in self._adj or m not in self._adj:
                raise ValidationError(f"dangling link ({n!r}, {m!r})")
            if n == m:
                raise ValidationError(f"self-loop on {n!r}")
            if (m, n) not in self.links:
                raise ValidationError(f"link ({n!r}, {m!r}) has no reverse")
            if not 0 <= attrs.residual_bandwidth <= attrs.bandwidth + 1e-9:
                raise ValidationError(f"residual out of range on ({n!r}, {m!r})")

    def __iter__(self) -> Iterator[str]:
        return iter(self._adj)

    def __len__(self) -> int:
        return len(self._adj)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": [
                {
                    "id": n,
                    "host": n in self._hosts,
                    **({"label": self.labels[n]} if n in self.labels else {}),
                    **({"switch": self.host_switch[n]} if n in self._hosts else {}),
                }
                for n in self._adj
            ],
            "links": [
                {
                    "src": n,
                    "dst": m,
                    "bw_bps": a.bandwidth,
                    "delay_ms": a.delay,
                    "cost": a.cost,
                    "residual_bps": a.residual_bandwidth,
                }
                for (n, m), a in self.links.items()
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> NetworkGraph:
        g = cls(name=data.get("name", ""))
        for node in data["nodes"]:
            nid = node["id"]
            if nid in g._adj:
                raise ValidationError(f"duplicate node id {nid!r}")
            g._adj[nid] = []
            if "label" in node:
                g.labels[nid] = node["label"]
            if node.get("host"):
                g._hosts.add(nid)
                g.host_switch[nid] = node["switch"]
        for entry in data["links"]:
            n, m = entry["src"], entry["dst"]
            if n not in g._adj or m not in g._adj:
                raise ValidationError(f"link ({n!r}, {m!r}) references unknown node")
            g.links[(n, m)] = LinkAttributes(
                entry["bw_bps"], entry["delay_ms"], entry["cost"], entry.get("residual_bps")
            )
            g._adj[n].append(m)
        g.validate()
        return g

    @classmethod
    def from_json(cls, text: str) -> NetworkGraph:
        return cls.from_dict(json.loads(text))


# -- GraphML ------------------------------------------------------------------

_ATTR_NAMES = {"bandwidth", "delay", "cost"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def load_graphml(text: str, defaults: LinkAttributes) -> NetworkGraph:
    """Build a graph from a GraphML document.

    Edges without ``bandwidth``/``delay``/``cost`` data take the values in
    ``defaults``. Parallel edges collapse onto one link pair (the first edge
    wins); the graph model has one link per ordered node pair.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise MalformedInputError(f"GraphML parse error at line {line}, column {col}: {exc}") from None
    if _local(root.tag) != "graphml":
        raise MalformedInputError(f"root element is <{_local(root.tag)}>, expected <graphml>")

    keys = {}
    for key in root.iter():
        if _local(key.tag) == "key":
            keys[key.get("id")] = (key.get("for"), key.get("attr.name"))

    g = NetworkGraph()
    graph_el = next((el for el in root if _local(el.tag) == "graph"), None)
    if graph_el is None:
        return g
    for el in graph_el:
        if _local(el.tag) == "data" and keys.get(el.get("key"), (None, None))[1] == "label":
            g.name = el.text or ""

    def data_of(el) -> dict[str, str]:
        out = {}
        for d in el:
            if _local(d.tag) == "data":
                name = keys.get(d.get("key"), (None, d.get("key")))[1]
                out[name] = (d.text or "").strip()
        return out

    host_edges = []
    for i, el in enumerate(graph_el):
        if _local(el.tag) != "node":
            continue
        node_id = el.get("id")
        if node_id is None:
            raise MalformedInputError(f"<node> element #{i} has no id attribute")
        data = data_of(el)
        if data.get("host", "").lower() == "true":
            host_edges.append(node_id)
            continue
        g.add_switch(node_id, data.get("label"))

    hosts = set(host_edges)
    for host in host_edges:
        g._adj[host] = []
        g._hosts.add(host)

    parallel = 0
    for i, el in enumerate(graph_el):
        if _local(el.tag) != "edge":
            continue
        src, dst = el.get("source"), el.get("target")
        for end in (src, dst):
            if end is None or not g.has_node(end):
                raise ValidationError(
                    f"<edge> #{i} ({src!r} -> {dst!r}) references unknown node {end!r}"
                )
        data = data_of(el)
        attrs = LinkAttributes(
            bandwidth=float(data.get("bandwidth") or defaults.bandwidth),
            delay=float(data.get("delay") or defaults.delay),
            cost=float(data.get("cost") or defaults.cost),
        )
        if g.has_link(src, dst):
            parallel += 1
            continue
        if src in hosts or dst in hosts:
            host, sw = (src, dst) if src in hosts else (dst, src)
            g.host_switch[host] = sw
        g.add_link(src, dst, attrs)
    if parallel:
        log.warning("collapsed %d parallel edge(s) in %s", parallel, g.name or "graph")
    g.validate()
    return g


def dump_graphml(graph: NetworkGraph) -> str:
    """Serialize to GraphML with explicit per-edge bandwidth, delay and cost.

    Directions are assumed symmetric in static attributes; the (n, m)
    direction of each edge is written.
    """
    ET.register_namespace("", GRAPHML_NS)
    q = lambda t: f"{{{GRAPHML_NS}}}{t}"  # noqa: E731
    root = ET.Element(q("graphml"))
    for kid, target, name, typ in [
        ("g0", "graph", "label", "string"),
        ("n0", "node", "label", "string"),
        ("n1", "node", "host", "boolean"),
        ("e0", "edge", "bandwidth", "double"),
        ("e1", "edge", "delay", "double"),
        ("e2", "edge", "cost", "double"),
    ]:
        ET.SubElement(root, q("key"), {"id": kid, "for": target, "attr.name": name, "attr.type": typ})
    gel = ET.SubElement(root, q("graph"), {"edgedefault": "undirected"})
    if graph.name:
        ET.SubElement(gel, q("data"), {"key": "g0"}).text = graph.name
    for n in graph.nodes:
        nel = ET.SubElement(gel, q("node"), {"id": n})
        if n in graph.labels:
            ET.SubElement(nel, q("data"), {"key": "n0"}).text = graph.labels[n]
        if graph.is_host(n):
            ET.SubElement(nel, q("data"), {"key": "n1"}).text = "true"
    for n, m in graph.undirected_links():
        a = graph.links[(n, m)]
        eel = ET.SubElement(gel, q("edge"), {"source": n, "target": m})
        for kid, val in (("e0", a.bandwidth), ("e1", a.delay), ("e2", a.cost)):
            ET.SubElement(eel, q("data"), {"key": kid}).text = repr(float(val))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True)


def attach_hosts(graph: NetworkGraph, link_attrs: LinkAttributes, prefix: str = "h") -> NetworkGraph:
    """Return a copy with one host per switch, named ``prefix + switch id``."""
    if graph.hosts:
        raise ValidationError("graph already has hosts attached")
    out = graph.copy()
    for sw in graph.switches:
        out.add_host(f"{prefix}{sw}", sw, link_attrs)
    return out


def build_simple_topology(
    bandwidth: float = 12e6, delay: float = 1.0, cost: float = 1.0
) -> NetworkGraph:
    """Five switches, three disjoint 2-hop S1-S5 paths, H1 at S1 and H2 at S5."""
    g = NetworkGraph(name="simple")
    attrs = LinkAttributes(bandwidth, delay, cost)
    for i in range(1, 6):
        g.add_switch(f"S{i}")
    for mid in ("S2", "S3", "S4"):
        g.add_link("S1", mid, attrs)
    for mid in ("S2", "S3", "S4"):
        g.add_link(mid, "S5", attrs)
    g.add_host("H1", "S1", attrs)
    g.add_host("H2", "S5", attrs)
    return g


def link_utilization(graph: NetworkGraph, link: Link) -> float:
    a = graph.link(*link)
    return (a.bandwidth - a.residual_bandwidth) / a.bandwidth


def subgraph_without(graph: NetworkGraph, failed: Iterable[Link]) -> NetworkGraph:
    """Copy of ``graph`` with the given links removed in both directions."""
    dead = set()
    for n, m in failed:
        dead.add((n, m))
        dead.add((m, n))
    out = graph.copy()
    for n, m in dead:
        if (n, m) in out.links:
            del out.links[(n, m)]
            out._adj[n].remove(m)
    return out
