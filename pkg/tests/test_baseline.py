import random

import pytest
from hypothesis import given, strategies as st

from oracles import lexicographic_shortest, random_connected_graph
from tel_lab.baseline import BaselineConfig, reroute_after_failure, shortest_path
from tel_lab.topology import LinkAttributes, NetworkGraph


def test_simple_two_hops(simple):
    p = shortest_path(simple, "S1", "S5")
    assert p.hops == 2 and p.nodes == ("S1", "S2", "S5")


def test_adjacent_pair(simple):
    assert shortest_path(simple, "S1", "S2").nodes == ("S1", "S2")


def test_unreachable():
    g = NetworkGraph()
    for n in "abc":
        g.add_switch(n)
    g.add_link("a", "b", LinkAttributes(1.0))
    assert shortest_path(g, "a", "c") is None


def test_unknown_endpoint(simple):
    with pytest.raises(KeyError):
        shortest_path(simple, "S1", "nope")


def test_reroute_picks_path2(simple):
    assert reroute_after_failure(simple, [("S1", "S2")], "H1", "H2").nodes == ("H1", "S1", "S3", "S5", "H2")


def test_reroute_nothing_failed(simple):
    assert reroute_after_failure(simple, [], "H1", "H2") == shortest_path(simple, "H1", "H2")


def test_reroute_all_source_links(simple):
    failed = [("S1", n) for n in simple.neighbors("S1")]
    assert reroute_after_failure(simple, failed, "S1", "S5") is None


def test_hosts_do_not_relay():
    # a multi-homed host bridging two otherwise disconnected switches
    g = NetworkGraph()
    for n in ("a", "b"):
        g.add_switch(n)
    g.add_host("h", "a", LinkAttributes(1.0))
    g.add_link("h", "b", LinkAttributes(1.0))
    assert shortest_path(g, "a", "b") is None
    assert shortest_path(g, "h", "b").nodes == ("h", "b")


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(control_plane_delay=-1)
    with pytest.raises(ValueError):
        BaselineConfig(metric="cost")


@given(st.integers(0, 100_000), st.sampled_from(["hops", "delay"]), st.integers(0, 3))
def test_matches_exhaustive_enumeration(gseed, metric, n_failed):
    g = random_connected_graph(gseed)
    r = random.Random(gseed)
    s, d = r.sample(g.nodes, 2)
    failed = r.sample(g.undirected_links(), min(n_failed, g.num_undirected_links))
    got = reroute_after_failure(g, failed, s, d, metric)
    want = lexicographic_shortest(g, s, d, metric, excluded=failed)
    if want is None:
        assert got is None
    else:
        assert got.nodes == want[1]
        assert got.value == pytest.approx(want[0])
