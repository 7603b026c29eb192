"""Directed interaction multigraphs with stance-based mixing statistics.

Edges run from a post's author to each resolved interaction target and keep
their interaction kind and originating post. Assortativity follows the
categorical mixing-matrix formulation: with e[i][j] the fraction of edges from
class i to class j, a and b its row/column marginals,

    r = (sum_i e[i][i] - sum_i a[i] * b[i]) / (1 - sum_i a[i] * b[i])

computed over directed edges (source marginal a, target marginal b); the
directedness choice is recorded in exported metadata. Multi-edges count with
multiplicity.
"""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .corpus import Post
from .errors import ConfigError, DataError

GROUPINGS: dict[str, frozenset[str]] = {
    "tag-reply": frozenset({"Tag", "Reply"}),
    "duet-stitch": frozenset({"Duet", "Stitch"}),
    "all": frozenset({"Tag", "Reply", "Duet", "Stitch"}),
    "tag": frozenset({"Tag"}),
    "reply": frozenset({"Reply"}),
    "duet": frozenset({"Duet"}),
    "stitch": frozenset({"Stitch"}),
}

STANCE_COLORS = {
    "AntiTrans": "red",
    "ProTrans": "green",
    "Neutral": "black",
    "Unknown": "gray",
}


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    kind: str
    post_id: str


@dataclass
class InteractionGraph:
    nodes: frozenset[str]
    edges: tuple[Edge, ...]
    grouping: str = "all"


@dataclass
class NodeStance:
    username: str
    stance: str
    post_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class MixingMatrix:
    classes: tuple[str, ...]
    e: np.ndarray
    a: np.ndarray
    b: np.ndarray
    edge_count: int

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "e": [[float(x) for x in row] for row in self.e],
            "a": [float(x) for x in self.a],
            "b": [float(x) for x in self.b],
            "edge_count": self.edge_count,
        }


@dataclass
class AssortativityResult:
    r: float | None
    reason: str | None
    mixing: MixingMatrix | None
    excluded_unknown_nodes: int
    edges_used: int

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "reason": self.reason,
            "mixing": self.mixing.to_dict() if self.mixing else None,
            "excluded_unknown_nodes": self.excluded_unknown_nodes,
            "edges_used": self.edges_used,
        }


def build_graph(posts: Sequence[Post], grouping: str = "all") -> InteractionGraph:
    """Build the directed multigraph of author -> target interactions.

    Only resolved interactions whose kind is admitted by the grouping filter
    produce edges; unresolved mentions produce none. Every post author is a
    node even without edges.
    """
    if grouping not in GROUPINGS:
        raise ConfigError(f"unknown grouping {grouping!r}; choose from {sorted(GROUPINGS)}")
    kinds = GROUPINGS[grouping]
    nodes: set[str] = set()
    edges: list[Edge] = []
    for post in posts:
        nodes.add(post.author)
        for interaction in post.interactions:
            if not interaction.resolved or interaction.kind not in kinds:
                continue
            nodes.add(interaction.target)
            edges.append(
                Edge(
                    source=post.author,
                    target=interaction.target,
                    kind=interaction.kind,
                    post_id=post.id,
                )
            )
    edges.sort(key=lambda e: (e.source, e.target, e.kind, e.post_id))
    return InteractionGraph(nodes=frozenset(nodes), edges=tuple(edges), grouping=grouping)


def largest_component(g: InteractionGraph) -> InteractionGraph:
    """Largest weakly connected component; size ties go to the component
    containing the smallest username."""
    if not g.nodes:
        return g
    neighbors: dict[str, set[str]] = defaultdict(set)
    for edge in g.edges:
        neighbors[edge.source].add(edge.target)
        neighbors[edge.target].add(edge.source)
    seen: set[str] = set()
    components: list[set[str]] = []
    for start in sorted(g.nodes):
        if start in seen:
            continue
        component = {start}
        queue = deque([start])
        seen.add(start)
        while queue:
            node = queue.popleft()
            for nxt in neighbors.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    component.add(nxt)
                    queue.append(nxt)
        components.append(component)
    winner = min(components, key=lambda c: (-len(c), min(c)))
    edges = tuple(e for e in g.edges if e.source in winner and e.target in winner)
    return InteractionGraph(nodes=frozenset(winner), edges=edges, grouping=g.grouping)


def node_stances(
    posts: Sequence[Post], verdicts: Mapping[str, str]
) -> dict[str, NodeStance]:
    """Aggregate per-post verdicts to a per-user stance.

    Majority class of the user's classified posts; ties resolve to Neutral; a
    user with no classified posts is Unknown.
    """
    per_user: dict[str, Counter] = defaultdict(Counter)
    authors: set[str] = set()
    for post in posts:
        authors.add(post.author)
        verdict = verdicts.get(post.id)
        if verdict in ("AntiTrans", "ProTrans", "Neutral"):
            per_user[post.author][verdict] += 1
    stances: dict[str, NodeStance] = {}
    for user in authors:
        counts = per_user.get(user)
        if not counts:
            stances[user] = NodeStance(username=user, stance="Unknown")
            continue
        top = max(counts.values())
        leaders = [cls for cls, n in counts.items() if n == top]
        stance = leaders[0] if len(leaders) == 1 else "Neutral"
        stances[user] = NodeStance(username=user, stance=stance, post_counts=dict(counts))
    return stances


def _stance_of(stances: Mapping[str, NodeStance | str], username: str) -> str:
    value = stances.get(username, "Unknown")
    if isinstance(value, NodeStance):
        return value.stance
    return value


def assortativity(
    g: InteractionGraph,
    stances: Mapping[str, NodeStance | str],
    include_neutral: bool = True,
) -> AssortativityResult:
    """Categorical assortativity over the directed mixing matrix.

    Unknown-stance nodes are excluded (count reported). With
    include_neutral=False, Neutral nodes and their incident edges are removed
    before the matrix is built.
    """
    classes = ("AntiTrans", "ProTrans", "Neutral") if include_neutral else ("AntiTrans", "ProTrans")
    admitted = set(classes)
    excluded_nodes = {
        node for node in g.nodes if _stance_of(stances, node) not in admitted
    }
    unknown_count = sum(1 for node in g.nodes if _stance_of(stances, node) == "Unknown")
    kept = [
        e
        for e in g.edges
        if e.source not in excluded_nodes and e.target not in excluded_nodes
    ]
    if not kept:
        return AssortativityResult(
            r=None,
            reason="no edges remain after stance filtering",
            mixing=None,
            excluded_unknown_nodes=unknown_count,
            edges_used=0,
        )
    index = {cls: i for i, cls in enumerate(classes)}
    e = np.zeros((len(classes), len(classes)), dtype=np.float64)
    for edge in kept:
        e[index[_stance_of(stances, edge.source)], index[_stance_of(stances, edge.target)]] += 1.0
    e /= len(kept)
    a = e.sum(axis=1)
    b = e.sum(axis=0)
    mixing = MixingMatrix(classes=classes, e=e, a=a, b=b, edge_count=len(kept))
    sum_ab = float(a @ b)
    denom = 1.0 - sum_ab
    if denom == 0.0:
        return AssortativityResult(
            r=None,
            reason="all edges fall in a single class; assortativity undefined",
            mixing=mixing,
            excluded_unknown_nodes=unknown_count,
            edges_used=len(kept),
        )
    r = (float(np.trace(e)) - sum_ab) / denom
    return AssortativityResult(
        r=r,
        reason=None,
        mixing=mixing,
        excluded_unknown_nodes=unknown_count,
        edges_used=len(kept),
    )


def drop_neutral(
    g: InteractionGraph, stances: Mapping[str, NodeStance | str]
) -> InteractionGraph:
    """Explicitly pre-filtered subgraph with Neutral nodes and incident edges removed."""
    kept_nodes = frozenset(n for n in g.nodes if _stance_of(stances, n) != "Neutral")
    kept_edges = tuple(
        e for e in g.edges if e.source in kept_nodes and e.target in kept_nodes
    )
    return InteractionGraph(nodes=kept_nodes, edges=kept_edges, grouping=g.grouping)


def class_ratio(
    g: InteractionGraph, stances: Mapping[str, NodeStance | str]
) -> dict:
    """Node counts per stance class plus the anti:pro ratio."""
    counts = Counter(_stance_of(stances, node) for node in g.nodes)
    for cls in ("AntiTrans", "ProTrans", "Neutral", "Unknown"):
        counts.setdefault(cls, 0)
    pro = counts["ProTrans"]
    ratio = counts["AntiTrans"] / pro if pro > 0 else None
    return {"counts": dict(sorted(counts.items())), "anti_pro_ratio": ratio}


def export_graphml(
    g: InteractionGraph, stances: Mapping[str, NodeStance | str], path: str | Path
) -> None:
    """Write deterministic GraphML: sorted nodes/edges, stance and kind attributes."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="stance" for="node" attr.name="stance" attr.type="string"/>',
        '  <key id="kind" for="edge" attr.name="kind" attr.type="string"/>',
        '  <key id="post" for="edge" attr.name="post" attr.type="string"/>',
        f'  <graph id={quoteattr(g.grouping)} edgedefault="directed">',
    ]
    for node in sorted(g.nodes):
        stance = _stance_of(stances, node)
        lines.append(
            f"    <node id={quoteattr(node)}><data key=\"stance\">{escape(stance)}</data></node>"
        )
    for i, edge in enumerate(sorted(g.edges, key=lambda e: (e.source, e.target, e.kind, e.post_id))):
        lines.append(
            f"    <edge id=\"e{i}\" source={quoteattr(edge.source)} target={quoteattr(edge.target)}>"
            f"<data key=\"kind\">{escape(edge.kind)}</data>"
            f"<data key=\"post\">{escape(edge.post_id)}</data></edge>"
        )
    lines.append("  </graph>")
    lines.append("</graphml>")
    _write(path, "\n".join(lines) + "\n")


def export_dot(
    g: InteractionGraph, stances: Mapping[str, NodeStance | str], path: str | Path
) -> None:
    """Write deterministic DOT with the stance color convention:
    anti-trans red, pro-trans green, neutral black, unknown gray.
    Edges take the color of their source node's stance."""
    lines = ["digraph interactions {"]
    for node in sorted(g.nodes):
        stance = _stance_of(stances, node)
        color = STANCE_COLORS.get(stance, "gray")
        lines.append(
            f'  {_dot_quote(node)} [stance={_dot_quote(stance)}, color={_dot_quote(color)}];'
        )
    for edge in sorted(g.edges, key=lambda e: (e.source, e.target, e.kind, e.post_id)):
        color = STANCE_COLORS.get(_stance_of(stances, edge.source), "gray")
        lines.append(
            f"  {_dot_quote(edge.source)} -> {_dot_quote(edge.target)} "
            f"[kind={_dot_quote(edge.kind)}, post={_dot_quote(edge.post_id)}, color={_dot_quote(color)}];"
        )
    lines.append("}")
    _write(path, "\n".join(lines) + "\n")


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write(path: str | Path, content: str) -> None:
    try:
        Path(path).write_text(content, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write graph file {path}: {exc}") from exc


def network_metrics(
    g: InteractionGraph, stances: Mapping[str, NodeStance | str]
) -> dict:
    """Metrics bundle emitted as JSON by the network stage."""
    with_neutral = assortativity(g, stances, include_neutral=True)
    without_neutral = assortativity(g, stances, include_neutral=False)
    ratio = class_ratio(g, stances)
    undefined_reasons = {}
    if with_neutral.r is None:
        undefined_reasons["r_with_neutral"] = with_neutral.reason
    if without_neutral.r is None:
        undefined_reasons["r_without_neutral"] = without_neutral.reason
    if ratio["anti_pro_ratio"] is None:
        undefined_reasons["anti_pro_ratio"] = "no pro-trans nodes"
    return {
        "grouping": g.grouping,
        "directed": True,
        "multiedges": True,
        "nodes": len(g.nodes),
        "edges": len(g.edges),
        "node_counts": ratio["counts"],
        "anti_pro_ratio": ratio["anti_pro_ratio"],
        "r_with_neutral": with_neutral.r,
        "r_without_neutral": without_neutral.r,
        "excluded_unknown_nodes": with_neutral.excluded_unknown_nodes,
        "undefined_reasons": undefined_reasons,
    }
