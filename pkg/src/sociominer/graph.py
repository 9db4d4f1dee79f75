"""Bipartite committer -> mailing-list communication graph."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable
from xml.sax.saxutils import escape, quoteattr

from .cluster import ClusterAssignment
from .errors import InputError
from .identity import IdentityMap
from .ingest import EmailMessage

MIN_MESSAGES = 10
LIST_PREFIX = "list:"
GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

# committer colour by personality cluster (index modulo length); grey = unclustered
PALETTE = ("#7b3294", "#1b9e77", "#d95f02", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4")
UNCLUSTERED_COLOR = "#999999"
LIST_COLOR = "#e41a1c"


@dataclass(frozen=True)
class CommitterNode:
    identity_id: str
    total_messages: int
    personality_cluster: int | None = None
    technical_cluster: int | None = None


@dataclass(frozen=True)
class CommGraph:
    committers: dict[str, CommitterNode] = field(default_factory=dict)
    lists: tuple[str, ...] = ()
    edges: dict[tuple[str, str], int] = field(default_factory=dict)  # (identity_id, list) -> count

    def __post_init__(self):
        lists = set(self.lists)
        for ident in self.committers:
            if ident.startswith(LIST_PREFIX):
                raise InputError(f"committer id {ident!r} clashes with the list node prefix")
        for (ident, lst), w in self.edges.items():
            if ident not in self.committers or lst not in lists:
                raise InputError(f"edge {ident} -- {lst} is not committer -> list")
            if w < 1:
                raise InputError(f"edge {ident} -- {lst} has weight {w}")

    def weighted_degree(self, ident: str) -> int:
        return sum(w for (i, _), w in self.edges.items() if i == ident)


def build_comm_graph(messages: Iterable[EmailMessage], imap: IdentityMap,
                     personality: ClusterAssignment | None = None,
                     technical: ClusterAssignment | None = None,
                     min_messages: int = MIN_MESSAGES, mode: str = "per_list",
                     committers: Iterable[str] | None = None) -> CommGraph:
    """Count messages per (committer, list) and keep committers that sent
    more than ``min_messages`` to at least one list (``mode="per_list"``) or
    in total (``mode="total"``). Kept committers retain every edge."""
    if mode not in ("per_list", "total"):
        raise InputError(f"unknown threshold mode {mode!r}")
    allowed = set(committers) if committers is not None else None
    counts: Counter = Counter()
    for m in messages:
        ident = imap.lookup(m.sender_email)
        if ident is None or (allowed is not None and ident.id not in allowed):
            continue
        counts[(ident.id, m.list_name)] += 1
    per_list: dict[str, list[int]] = {}
    for (ident, _), n in counts.items():
        per_list.setdefault(ident, []).append(n)
    keep = set()
    for ident, ns in per_list.items():
        score = max(ns) if mode == "per_list" else sum(ns)
        if score > min_messages:
            keep.add(ident)
    edges = {key: n for key, n in sorted(counts.items()) if key[0] in keep}
    nodes = {}
    for ident in sorted(keep):
        nodes[ident] = CommitterNode(
            ident,
            sum(n for (i, _), n in edges.items() if i == ident),
            personality.labels.get(ident) if personality else None,
            technical.labels.get(ident) if technical else None,
        )
    lists = tuple(sorted({lst for _, lst in edges}))
    return CommGraph(nodes, lists, edges)


# ---- GraphML ---------------------------------------------------------------

_KEYS = (
    ("type", "node", "string"),
    ("personality_cluster", "node", "int"),
    ("technical_cluster", "node", "int"),
    ("total_messages", "node", "int"),
    ("weight", "edge", "int"),
)


def _node_rows(g: CommGraph):
    rows = []
    for ident, node in g.committers.items():
        data = {"type": "committer", "total_messages": node.total_messages}
        if node.personality_cluster is not None:
            data["personality_cluster"] = node.personality_cluster
        if node.technical_cluster is not None:
            data["technical_cluster"] = node.technical_cluster
        rows.append((ident, data))
    for lst in g.lists:
        rows.append((LIST_PREFIX + lst, {"type": "list"}))
    return sorted(rows, key=lambda r: r[0])


def export_graphml(g: CommGraph) -> str:
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<graphml xmlns="{GRAPHML_NS}" '
           'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" '
           f'xsi:schemaLocation="{GRAPHML_NS} {GRAPHML_NS}/1.0/graphml.xsd">']
    for name, domain, typ in _KEYS:
        out.append(f'  <key id="{name}" for="{domain}" attr.name="{name}" attr.type="{typ}"/>')
    out.append('  <graph id="communication" edgedefault="undirected">')
    for node_id, data in _node_rows(g):
        out.append(f"    <node id={quoteattr(node_id)}>")
        for name, _, _ in _KEYS:
            if name in data:
                out.append(f'      <data key="{name}">{escape(str(data[name]))}</data>')
        out.append("    </node>")
    for (ident, lst), w in sorted(g.edges.items()):
        out.append(f"    <edge source={quoteattr(ident)} target={quoteattr(LIST_PREFIX + lst)}>")
        out.append(f'      <data key="weight">{w}</data>')
        out.append("    </edge>")
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def read_graphml(text: str) -> CommGraph:
    """Inverse of :func:`export_graphml`."""
    ns = {"g": GRAPHML_NS}
    root = ET.fromstring(text)
    graph = root.find("g:graph", ns)
    committers, lists, edges = {}, [], {}

    def data(el):
        return {d.get("key"): d.text for d in el.findall("g:data", ns)}

    for node in graph.findall("g:node", ns):
        d = data(node)
        if d.get("type") == "list":
            lists.append(node.get("id")[len(LIST_PREFIX):])
            continue
        opt = lambda k: int(d[k]) if k in d else None  # noqa: E731
        committers[node.get("id")] = CommitterNode(node.get("id"), int(d["total_messages"]),
                                                   opt("personality_cluster"),
                                                   opt("technical_cluster"))
    for edge in graph.findall("g:edge", ns):
        edges[(edge.get("source"), edge.get("target")[len(LIST_PREFIX):])] = int(data(edge)["weight"])
    return CommGraph(committers, tuple(sorted(lists)), edges)


# ---- DOT -------------------------------------------------------------------

def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def penwidth(weight: int, max_weight: int) -> float:
    return 1.0 + 4.0 * weight / max_weight


def node_color(personality_cluster: int | None) -> str:
    if personality_cluster is None:
        return UNCLUSTERED_COLOR
    return PALETTE[personality_cluster % len(PALETTE)]


def export_dot(g: CommGraph) -> str:
    out = ["graph communication {", "  node [style=filled, fontsize=10];"]
    for node_id, data in _node_rows(g):
        if data["type"] == "list":
            out.append(f"  {_dot_id(node_id)} [shape=doublecircle, color={_dot_id(LIST_COLOR)}, "
                       f"label={_dot_id(node_id[len(LIST_PREFIX):])}];")
        else:
            pc = data.get("personality_cluster")
            pc_attr = f", personality_cluster={pc}" if pc is not None else ""
            out.append(f"  {_dot_id(node_id)} [shape=circle, color={_dot_id(node_color(pc))}"
                       f"{pc_attr}, total_messages={data['total_messages']}];")
    max_w = max(g.edges.values(), default=1)
    for (ident, lst), w in sorted(g.edges.items()):
        out.append(f"  {_dot_id(ident)} -- {_dot_id(LIST_PREFIX + lst)} "
                   f"[weight={w}, penwidth={penwidth(w, max_w):.6f}];")
    out.append("}")
    return "\n".join(out) + "\n"
