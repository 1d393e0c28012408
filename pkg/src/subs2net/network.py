"""Weighted, timestamped character co-occurrence networks."""
from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import UnsupportedFormat
from .mentions import Mention
from .roster import UNKNOWN, RosterEntry

DEFAULT_T_WINDOW_S = 60
DEFAULT_W_MIN = 2

GEXF_NS = "http://www.gexf.net/1.2draft"


@dataclass(frozen=True)
class NodeInfo:
    display_name: str
    gender: str = UNKNOWN
    actor_name: str = ""


@dataclass
class EdgeInfo:
    timestamps: list[int] = field(default_factory=list)

    @property
    def weight(self) -> int:
        return len(self.timestamps)


def edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass
class MovieNetwork:
    movie_id: str
    nodes: dict[str, NodeInfo] = field(default_factory=dict)
    edges: dict[tuple[str, str], EdgeInfo] = field(default_factory=dict)

    def add_node(self, key: str, info: NodeInfo | None = None) -> None:
        if key not in self.nodes:
            self.nodes[key] = info or NodeInfo(key)

    def add_interaction(self, u: str, v: str, time_ms: int) -> None:
        if u == v:
            raise ValueError(f"self-loop on {u!r}")
        self.add_node(u)
        self.add_node(v)
        self.edges.setdefault(edge_key(u, v), EdgeInfo()).timestamps.append(time_ms)

    def weight(self, u: str, v: str) -> int:
        e = self.edges.get(edge_key(u, v))
        return e.weight if e else 0

    def neighbors(self, v: str) -> Iterator[str]:
        for a, b in self.edges:
            if a == v:
                yield b
            elif b == v:
                yield a

    def adjacency(self) -> dict[str, dict[str, int]]:
        adj: dict[str, dict[str, int]] = {v: {} for v in self.nodes}
        for (u, v), e in self.edges.items():
            adj[u][v] = e.weight
            adj[v][u] = e.weight
        return adj

    def sorted_edges(self) -> list[tuple[str, str, EdgeInfo]]:
        return [(u, v, self.edges[(u, v)]) for u, v in sorted(self.edges)]

    def edge_set(self) -> set[tuple[str, str]]:
        return set(self.edges)

    def copy(self) -> "MovieNetwork":
        return MovieNetwork(
            self.movie_id,
            dict(self.nodes),
            {k: EdgeInfo(list(e.timestamps)) for k, e in self.edges.items()},
        )

    def filter_edges(self, w_min: int) -> "MovieNetwork":
        net = self.copy()
        net.edges = {k: e for k, e in net.edges.items() if e.weight >= w_min}
        return net

    def summary(self) -> dict:
        return {
            "movie_id": self.movie_id,
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "total_weight": sum(e.weight for e in self.edges.values()),
        }


def nodes_from_roster(roster: Iterable[RosterEntry]) -> dict[str, NodeInfo]:
    nodes: dict[str, NodeInfo] = {}
    for entry in roster:
        nodes.setdefault(entry.key, NodeInfo(entry.character_name, entry.gender, entry.actor_name))
    return nodes


def build_network(
    mentions: list[Mention],
    roster: Iterable[RosterEntry],
    t_window_s: int = DEFAULT_T_WINDOW_S,
    w_min: int = DEFAULT_W_MIN,
    movie_id: str = "",
) -> MovieNetwork:
    """Link characters mentioned less than ``t_window_s`` seconds apart.

    Each mention adds one unit of weight towards every other character seen
    in the preceding window (once per character), stamped with the later
    mention's time. Edges lighter than ``w_min`` are dropped afterwards;
    roster characters stay as nodes even when isolated.
    """
    if t_window_s <= 0 or w_min <= 0:
        raise ValueError("t_window_s and w_min must be positive")
    net = MovieNetwork(movie_id, nodes_from_roster(roster))
    window_ms = t_window_s * 1000
    ordered = sorted(enumerate(mentions), key=lambda im: (im[1].time_ms, im[0]))
    recent: deque[Mention] = deque()
    for _, m in ordered:
        while recent and m.time_ms - recent[0].time_ms >= window_ms:
            recent.popleft()
        partners = {p.character_key for p in recent} - {m.character_key}
        for other in sorted(partners):
            net.add_interaction(m.character_key, other, m.time_ms)
        recent.append(m)
    return net.filter_edges(w_min)


def snapshot(net: MovieNetwork, until_ms: float) -> MovieNetwork:
    """View of ``net`` restricted to interactions at or before ``until_ms``."""
    out = MovieNetwork(net.movie_id, dict(net.nodes))
    for k, e in net.edges.items():
        kept = [t for t in e.timestamps if t <= until_ms]
        if kept:
            out.edges[k] = EdgeInfo(kept)
    return out


# -- export / import ---------------------------------------------------------

def to_json_dict(net: MovieNetwork) -> dict:
    return {
        "movie_id": net.movie_id,
        "nodes": [
            {"key": k, "display_name": n.display_name, "gender": n.gender, "actor_name": n.actor_name}
            for k, n in sorted(net.nodes.items())
        ],
        "edges": [
            {"u": u, "v": v, "weight": e.weight, "timestamps": sorted(e.timestamps)}
            for u, v, e in net.sorted_edges()
        ],
    }


def from_json_dict(data: dict) -> MovieNetwork:
    net = MovieNetwork(data.get("movie_id", ""))
    for n in data["nodes"]:
        net.nodes[n["key"]] = NodeInfo(n["display_name"], n.get("gender", UNKNOWN), n.get("actor_name", ""))
    for e in data["edges"]:
        stamps = list(e.get("timestamps") or [])
        if not stamps:
            # plain weighted edge lists carry no times
            stamps = [0] * int(e["weight"])
        net.add_node(e["u"])
        net.add_node(e["v"])
        net.edges[edge_key(e["u"], e["v"])] = EdgeInfo(stamps)
    return net


def _to_gexf(net: MovieNetwork) -> bytes:
    ET.register_namespace("", GEXF_NS)
    root = ET.Element(f"{{{GEXF_NS}}}gexf", {"version": "1.2"})
    meta = ET.SubElement(root, f"{{{GEXF_NS}}}meta")
    ET.SubElement(meta, f"{{{GEXF_NS}}}creator").text = "subs2net"
    ET.SubElement(meta, f"{{{GEXF_NS}}}description").text = net.movie_id
    graph = ET.SubElement(root, f"{{{GEXF_NS}}}graph", {"mode": "static", "defaultedgetype": "undirected"})

    nattrs = ET.SubElement(graph, f"{{{GEXF_NS}}}attributes", {"class": "node"})
    ET.SubElement(nattrs, f"{{{GEXF_NS}}}attribute", {"id": "gender", "title": "gender", "type": "string"})
    ET.SubElement(nattrs, f"{{{GEXF_NS}}}attribute", {"id": "actor", "title": "actor", "type": "string"})
    eattrs = ET.SubElement(graph, f"{{{GEXF_NS}}}attributes", {"class": "edge"})
    ET.SubElement(eattrs, f"{{{GEXF_NS}}}attribute", {"id": "timestamps", "title": "timestamps", "type": "string"})

    nodes = ET.SubElement(graph, f"{{{GEXF_NS}}}nodes")
    for key, info in sorted(net.nodes.items()):
        node = ET.SubElement(nodes, f"{{{GEXF_NS}}}node", {"id": key, "label": info.display_name})
        vals = ET.SubElement(node, f"{{{GEXF_NS}}}attvalues")
        ET.SubElement(vals, f"{{{GEXF_NS}}}attvalue", {"for": "gender", "value": info.gender})
        ET.SubElement(vals, f"{{{GEXF_NS}}}attvalue", {"for": "actor", "value": info.actor_name})

    edges = ET.SubElement(graph, f"{{{GEXF_NS}}}edges")
    for i, (u, v, e) in enumerate(net.sorted_edges()):
        edge = ET.SubElement(
            edges, f"{{{GEXF_NS}}}edge", {"id": str(i), "source": u, "target": v, "weight": str(e.weight)}
        )
        vals = ET.SubElement(edge, f"{{{GEXF_NS}}}attvalues")
        stamps = " ".join(str(t) for t in sorted(e.timestamps))
        ET.SubElement(vals, f"{{{GEXF_NS}}}attvalue", {"for": "timestamps", "value": stamps})

    ET.indent(root)
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True) + b"\n"


def _from_gexf(data: bytes) -> MovieNetwork:
    root = ET.fromstring(data)
    ns = {"g": root.tag[1:].split("}")[0]} if root.tag.startswith("{") else {"g": ""}
    prefix = "g:" if ns["g"] else ""
    desc = root.find(f"{prefix}meta/{prefix}description", ns)
    net = MovieNetwork((desc.text or "") if desc is not None else "")
    graph = root.find(f"{prefix}graph", ns)
    for node in graph.iterfind(f"{prefix}nodes/{prefix}node", ns):
        attrs = {a.get("for"): a.get("value") for a in node.iterfind(f"{prefix}attvalues/{prefix}attvalue", ns)}
        net.nodes[node.get("id")] = NodeInfo(
            node.get("label") or node.get("id"), attrs.get("gender") or UNKNOWN, attrs.get("actor") or ""
        )
    for edge in graph.iterfind(f"{prefix}edges/{prefix}edge", ns):
        u, v = edge.get("source"), edge.get("target")
        if u == v:
            continue
        attrs = {a.get("for"): a.get("value") for a in edge.iterfind(f"{prefix}attvalues/{prefix}attvalue", ns)}
        stamps = [int(t) for t in (attrs.get("timestamps") or "").split()]
        weight = int(round(float(edge.get("weight", "1"))))
        if len(stamps) != weight:
            stamps = [0] * weight
        net.add_node(u)
        net.add_node(v)
        net.edges[edge_key(u, v)] = EdgeInfo(stamps)
    return net


def _to_csv(net: MovieNetwork) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["u", "v", "weight"])
    for u, v, e in net.sorted_edges():
        writer.writerow([u, v, e.weight])
    return buf.getvalue().encode("utf-8")


def export_network(net: MovieNetwork, fmt: str) -> bytes:
    fmt = fmt.lower()
    if fmt == "gexf":
        return _to_gexf(net)
    if fmt == "json":
        return (json.dumps(to_json_dict(net), ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        return _to_csv(net)
    raise UnsupportedFormat(f"unsupported network format {fmt!r}")


def load_network(data: bytes, fmt: str) -> MovieNetwork:
    fmt = fmt.lower()
    if fmt == "gexf":
        return _from_gexf(data)
    if fmt == "json":
        return from_json_dict(json.loads(data))
    if fmt == "csv":
        net = MovieNetwork("")
        for row in csv.DictReader(io.StringIO(data.decode("utf-8"))):
            net.add_node(row["u"])
            net.add_node(row["v"])
            net.edges[edge_key(row["u"], row["v"])] = EdgeInfo([0] * int(row["weight"]))
        return net
    raise UnsupportedFormat(f"unsupported network format {fmt!r}")
