"""Write TopologyZoo topologies as GraphML under data/topologyzoo/.

The graphs come from the ``topohub`` package (pip install topohub), which
embeds the Internet Topology Zoo in node-link JSON form. Only structure and
node names/coordinates are exported; link bandwidth, delay and cost are left
to scenario defaults.

    python scripts/build_zoo_graphml.py [NAME ...]
"""

import argparse
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import topohub

NS = "http://graphml.graphdrawing.org/xmlns"

DEFAULT_SET = [
    "Basnet", "Sanren", "Getnet", "Abilene", "Nsfnet", "Claranet", "Savvis",
    "Aarnet", "Goodnet", "Geant2001", "Bics", "AttMpls", "Surfnet", "Dfn",
    "Uninett2011", "TataNld",
]


def to_graphml(topo: dict, name: str) -> str:
    ET.register_namespace("", NS)
    q = lambda t: f"{{{NS}}}{t}"  # noqa: E731
    root = ET.Element(q("graphml"))
    for kid, target, attr, typ in [
        ("d0", "graph", "label", "string"),
        ("d1", "node", "label", "string"),
        ("d2", "node", "Longitude", "double"),
        ("d3", "node", "Latitude", "double"),
    ]:
        ET.SubElement(root, q("key"), {"id": kid, "for": target, "attr.name": attr, "attr.type": typ})
    g = ET.SubElement(root, q("graph"), {"edgedefault": "undirected"})
    ET.SubElement(g, q("data"), {"key": "d0"}).text = name
    for node in topo["nodes"]:
        el = ET.SubElement(g, q("node"), {"id": str(node["id"])})
        ET.SubElement(el, q("data"), {"key": "d1"}).text = str(node.get("name", node["id"]))
        if node.get("pos"):
            lon, lat = node["pos"]
            ET.SubElement(el, q("data"), {"key": "d2"}).text = str(lon)
            ET.SubElement(el, q("data"), {"key": "d3"}).text = str(lat)
    for i, edge in enumerate(topo["edges"]):
        ET.SubElement(g, q("edge"), {"id": f"e{i}", "source": str(edge["source"]), "target": str(edge["target"])})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", default=DEFAULT_SET)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "topologyzoo"))
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        topo = topohub.get(f"topozoo/{name}")
        (out / f"{name}.graphml").write_text(to_graphml(topo, name))
        print(f"{name}: {len(topo['nodes'])} nodes, {len(topo['edges'])} edges", file=sys.stderr)


if __name__ == "__main__":
    main()
