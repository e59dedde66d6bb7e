"""Reactive shortest-path comparator (OSPF-like)."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

from .dla import PathCandidate
from .topology import Link, NetworkGraph

METRICS = ("hops", "delay")


@dataclass(frozen=True)
class BaselineConfig:
    metric: str = "hops"
    control_plane_delay: float = 1000.0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.control_plane_delay < 0:
            raise ValueError("control_plane_delay must be >= 0")


def shortest_path(
    graph: NetworkGraph,
    s: str,
    d: str,
    metric: str = "hops",
    excluded: Iterable[Link] = (),
) -> PathCandidate | None:
    """Dijkstra; equal-cost ties go to the lexicographically smallest node list.

    Hosts other than ``s`` and ``d`` never forward traffic. Returns None when
    ``d`` is unreachable.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if not graph.has_node(s) or not graph.has_node(d):
        raise KeyError(f"unknown endpoint in ({s!r}, {d!r})")
    banned = set()
    for n, m in excluded:
        banned.add((n, m))
        banned.add((m, n))
    # (cost, path) ordering makes the first settled path the lexicographic minimum
    heap = [(0.0, (s,))]
    settled = set()
    best = {s: 0.0}
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == d:
            return PathCandidate(path, cost)
        if node != s and graph.is_host(node):
            continue
        for nb in graph.neighbors(node):
            if nb in settled or (node, nb) in banned:
                continue
            w = 1.0 if metric == "hops" else graph.links[(node, nb)].delay
            nc = cost + w
            if nc <= best.get(nb, float("inf")):
                best[nb] = nc
                heapq.heappush(heap, (nc, path + (nb,)))
    return None


def reroute_after_failure(
    graph: NetworkGraph,
    failed_links: Iterable[Link],
    s: str,
    d: str,
    metric: str = "hops",
) -> PathCandidate | None:
    return shortest_path(graph, s, d, metric, excluded=failed_links)
