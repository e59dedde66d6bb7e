from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from tel_lab.topology import (
    CapacityPolicy,
    LinkAttributes,
    MalformedInputError,
    NetworkGraph,
    UnknownLinkError,
    ValidationError,
    attach_hosts,
    build_simple_topology,
    dump_graphml,
    link_utilization,
    load_graphml,
    subgraph_without,
)

ZOO = Path(__file__).resolve().parents[1] / "data" / "topologyzoo"
DEFAULTS = LinkAttributes(4.5e6, 1.0, 1.0)

GML_HEAD = '<?xml version="1.0"?><graphml xmlns="http://graphml.graphdrawing.org/xmlns">'


def zoo(name):
    return load_graphml((ZOO / f"{name}.graphml").read_text(), DEFAULTS)


def test_goodnet_counts():
    g = zoo("Goodnet")
    assert (len(g.switches), g.num_undirected_links, len(g.links)) == (17, 31, 62)


def test_attmpls_counts():
    # the vendored copy has 56 distinct node pairs; see the decisions log
    g = zoo("AttMpls")
    assert len(g.switches) == 25
    assert g.num_undirected_links == 56
    assert len(g.links) == 112


def test_empty_document():
    g = load_graphml(GML_HEAD + "</graphml>", DEFAULTS)
    assert len(g) == 0 and not g.links
    g = load_graphml(GML_HEAD + '<graph edgedefault="undirected"/></graphml>', DEFAULTS)
    assert len(g) == 0 and not g.links


def test_residual_starts_at_capacity():
    g = zoo("Goodnet")
    assert all(a.residual_bandwidth == a.bandwidth == 4.5e6 for a in g.links.values())


def test_malformed_reports_position():
    with pytest.raises(MalformedInputError, match="line 1"):
        load_graphml(GML_HEAD + "<graph><node id='a'></graph>", DEFAULTS)


def test_wrong_root():
    with pytest.raises(MalformedInputError):
        load_graphml("<notgraphml/>", DEFAULTS)


def test_duplicate_node():
    text = GML_HEAD + '<graph><node id="a"/><node id="a"/></graph></graphml>'
    with pytest.raises(ValidationError, match="duplicate"):
        load_graphml(text, DEFAULTS)


def test_edge_to_unknown_node():
    text = GML_HEAD + '<graph><node id="a"/><edge source="a" target="z"/></graph></graphml>'
    with pytest.raises(ValidationError, match="'z'"):
        load_graphml(text, DEFAULTS)


def test_parallel_edges_collapse(caplog):
    text = GML_HEAD + (
        '<graph><node id="a"/><node id="b"/>'
        '<edge source="a" target="b"/><edge source="b" target="a"/></graph></graphml>'
    )
    g = load_graphml(text, DEFAULTS)
    assert g.num_undirected_links == 1
    assert "parallel" in caplog.text


def test_edge_attributes_override_defaults():
    text = GML_HEAD + (
        '<key id="k0" for="edge" attr.name="bandwidth"/><key id="k1" for="edge" attr.name="delay"/>'
        '<graph><node id="a"/><node id="b"/><edge source="a" target="b">'
        '<data key="k0">1e6</data><data key="k1">7.5</data></edge></graph></graphml>'
    )
    a = load_graphml(text, DEFAULTS).link("a", "b")
    assert (a.bandwidth, a.delay, a.cost) == (1e6, 7.5, 1.0)


def test_attach_hosts_goodnet():
    g = attach_hosts(zoo("Goodnet"), DEFAULTS)
    assert g.num_undirected_links == 31 + 17
    assert len(g.hosts) == 17
    assert all(g.host_switch[h] in g.switches for h in g.hosts)


def test_attach_hosts_single_switch():
    g = NetworkGraph()
    g.add_switch("s")
    g = attach_hosts(g, DEFAULTS)
    assert g.hosts == ["hs"] and g.num_undirected_links == 1


def test_attach_hosts_twice_rejected():
    g = attach_hosts(zoo("Basnet"), DEFAULTS)
    with pytest.raises(ValidationError):
        attach_hosts(g, DEFAULTS)


def test_simple_topology():
    g = build_simple_topology()
    assert sorted(g.switches) == ["S1", "S2", "S3", "S4", "S5"]
    assert sorted(g.hosts) == ["H1", "H2"]
    assert g.host_switch == {"H1": "S1", "H2": "S5"}
    assert all(a.bandwidth == 12_000_000 for a in g.links.values())
    assert g.neighbors("S1") == ["S2", "S3", "S4", "H1"]
    for mid in ("S2", "S3", "S4"):
        assert g.has_link("S1", mid) and g.has_link(mid, "S5")
    assert not g.has_link("S1", "S5")


def test_link_utilization():
    g = build_simple_topology()
    assert link_utilization(g, ("S1", "S2")) == 0.0
    g.link("S1", "S2").residual_bandwidth = 6e6
    assert link_utilization(g, ("S1", "S2")) == 0.5
    # directions are independent
    assert link_utilization(g, ("S2", "S1")) == 0.0
    g.link("S1", "S2").residual_bandwidth = 0.0
    assert link_utilization(g, ("S1", "S2")) == 1.0
    with pytest.raises(UnknownLinkError):
        link_utilization(g, ("S1", "S5"))


def test_link_attribute_validation():
    with pytest.raises(ValueError):
        LinkAttributes(1e6, residual_bandwidth=2e6)
    with pytest.raises(ValueError):
        LinkAttributes(1e6, delay=-1)
    with pytest.raises(ValueError):
        CapacityPolicy(0.0)


def test_self_loop_rejected():
    g = NetworkGraph()
    g.add_switch("a")
    with pytest.raises(ValidationError):
        g.add_link("a", "a", DEFAULTS)


def test_subgraph_without():
    g = subgraph_without(build_simple_topology(), [("S2", "S1")])
    assert not g.has_link("S1", "S2") and not g.has_link("S2", "S1")
    assert "S2" not in g.neighbors("S1")


@pytest.mark.parametrize("name", ["Goodnet", "AttMpls", "Abilene"])
def test_graphml_round_trip(name):
    g = attach_hosts(zoo(name), DEFAULTS)
    back = load_graphml(dump_graphml(g), LinkAttributes(1.0))
    assert back.nodes == g.nodes
    assert set(back.hosts) == set(g.hosts)
    assert back.links == g.links
    assert back.host_switch == g.host_switch


def test_json_round_trip(simple):
    simple.link("S1", "S2").residual_bandwidth = 5e6
    back = NetworkGraph.from_json(simple.to_json())
    assert back.links == simple.links
    assert all(back.neighbors(n) == simple.neighbors(n) for n in simple.nodes)
    d = simple.to_dict()
    assert {"src", "dst", "bw_bps", "delay_ms", "cost"} <= set(d["links"][0])


edges = st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20)


@given(edges, st.floats(1e3, 1e9), st.floats(0, 50))
def test_round_trip_and_bidirection_property(pairs, bw, delay):
    g = NetworkGraph()
    for i in range(8):
        g.add_switch(f"v{i}")
    for u, v in pairs:
        if u != v and not g.has_link(f"v{u}", f"v{v}"):
            g.add_link(f"v{u}", f"v{v}", LinkAttributes(bw, delay, 1.0))
    for (n, m), a in g.links.items():
        assert (m, n) in g.links
        assert 0 <= a.residual_bandwidth <= a.bandwidth
    back = load_graphml(dump_graphml(g), LinkAttributes(1.0))
    assert back.nodes == g.nodes and back.links == g.links
