"""Per-sample dependency graphs and their topological measures.

Graphs are undirected views over token indices: directed trees would make
leaves unreachable for the distance-based metrics, and the path examples
this package reproduces require undirected traversal.  ROOT edges never
enter the adjacency.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .corpus import ROOT, SEMANTIC, SYNTACTIC, AnnotatedSample, EntityMention


class DegenerateGraphError(ValueError):
    """Raised when a metric is requested on a graph with fewer than 2 nodes."""


@dataclass(frozen=True)
class DepGraph:
    n: int
    adj: tuple[tuple[int, ...], ...]  # sorted neighbor lists, symmetric
    rel_of: dict[tuple[int, int], str]  # directed (head, dep) -> relation label
    layer: str

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def incident_rels(self, span: range) -> list[str]:
        """Relation labels of all edges touching a token of ``span``, sorted."""
        inside = set(span)
        rels = [
            rel for (h, d), rel in self.rel_of.items() if h in inside or d in inside
        ]
        return sorted(rels)


def build_graph(sample: AnnotatedSample, layer: str) -> DepGraph:
    """Undirected graph over the sample's tokens for one dependency layer.

    Duplicate edges between the same pair collapse to a single undirected
    edge; the typed labels stay reachable through ``rel_of``.
    """
    if layer == SYNTACTIC:
        edges = sample.syn_edges
    elif layer == SEMANTIC:
        edges = sample.sem_edges
    else:
        raise ValueError(f"unknown layer {layer!r}")
    n = len(sample.tokens)
    neigh: list[set[int]] = [set() for _ in range(n)]
    rel_of: dict[tuple[int, int], str] = {}
    for e in edges:
        if e.head == ROOT:
            continue
        neigh[e.head].add(e.dep)
        neigh[e.dep].add(e.head)
        rel_of.setdefault((e.head, e.dep), e.rel)
    return DepGraph(n=n, adj=tuple(tuple(sorted(s)) for s in neigh), rel_of=rel_of, layer=layer)


def _require_nodes(g: DepGraph) -> None:
    if g.n < 2:
        raise DegenerateGraphError(f"centrality undefined on a graph with {g.n} node(s)")


def _bfs_distances(g: DepGraph, source: int) -> list[int]:
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def degree_centrality(g: DepGraph) -> list[float]:
    _require_nodes(g)
    return [len(g.adj[v]) / (g.n - 1) for v in range(g.n)]


def closeness_centrality(g: DepGraph) -> list[float]:
    """Closeness with the Wasserman-Faust component scaling.

    For a node in a component of size k the raw value (k-1)/sum(d) is
    scaled by (k-1)/(n-1), so disconnected graphs still get finite,
    comparable values.  Isolated nodes score 0.
    """
    _require_nodes(g)
    out = []
    for v in range(g.n):
        dist = _bfs_distances(g, v)
        reach = [d for d in dist if d > 0]
        if not reach:
            out.append(0.0)
            continue
        k = len(reach) + 1
        out.append((k - 1) / sum(reach) * (k - 1) / (g.n - 1))
    return out


def betweenness_centrality(g: DepGraph) -> list[float]:
    """Brandes pair-dependency accumulation, endpoints excluded.

    Normalized by 2/((n-1)(n-2)) for the undirected graph; graphs with
    fewer than 3 nodes have no strictly interior node and score all zero.
    """
    _require_nodes(g)
    n = g.n
    if n < 3:
        return [0.0] * n
    acc = [0.0] * n
    for s in range(n):
        order: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in g.adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while order:
            w = order.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                acc[w] += delta[w]
    # each unordered pair was counted from both endpoints: 1/2 * 2/((n-1)(n-2))
    scale = 1.0 / ((n - 1) * (n - 2))
    return [x * scale for x in acc]


def aggregate_centrality(
    bc: list[float], cc: list[float], dc: list[float], mode: str = "mean"
) -> list[float]:
    if not len(bc) == len(cc) == len(dc):
        raise ValueError("centrality vectors must come from the same graph")
    if mode == "mean":
        return [(b + c + d) / 3.0 for b, c, d in zip(bc, cc, dc)]
    if mode == "sum":
        return [b + c + d for b, c, d in zip(bc, cc, dc)]
    raise ValueError(f"unknown aggregation mode {mode!r}")


@dataclass(frozen=True)
class CentralityProfile:
    bc: tuple[float, ...]
    cc: tuple[float, ...]
    dc: tuple[float, ...]
    agg: tuple[float, ...]

    @classmethod
    def compute(cls, g: DepGraph, mode: str = "mean") -> "CentralityProfile":
        bc = betweenness_centrality(g)
        cc = closeness_centrality(g)
        dc = degree_centrality(g)
        return cls(tuple(bc), tuple(cc), tuple(dc), tuple(aggregate_centrality(bc, cc, dc, mode)))


def entity_centrality(profile: CentralityProfile, mention: EntityMention) -> float:
    """Aggregate centrality of a mention: the mean over its span tokens."""
    vals = [profile.agg[i] for i in mention.span]
    return sum(vals) / len(vals)


def topological_distance(a: float, b: float) -> float:
    return abs(a - b)


@dataclass(frozen=True)
class SdpResult:
    path: tuple[int, ...]  # e1 anchor to e2 anchor, inclusive
    interior: tuple[int, ...]  # path tokens outside both entity spans, in path order
    found: bool


def shortest_dependency_path(
    g: DepGraph, e1: EntityMention, e2: EntityMention
) -> SdpResult:
    """Shortest undirected path between the two mentions' token sets.

    Ties are broken by the lexicographically smallest token-index
    sequence, which makes the result independent of adjacency insertion
    order.  ``found`` is False when the mentions are disconnected.
    """
    span1 = list(e1.span)
    span2set = set(e2.span)
    # distance of every node to the nearest e2 token
    dist = [-1] * g.n
    queue = deque()
    for t in sorted(span2set):
        dist[t] = 0
        queue.append(t)
    while queue:
        v = queue.popleft()
        for w in g.adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    starts = [(dist[s], s) for s in span1 if dist[s] >= 0]
    if not starts:
        return SdpResult((), (), False)
    length, start = min(starts)
    path = [start]
    remaining = length
    node = start
    while remaining > 0:
        node = min(w for w in g.adj[node] if dist[w] == remaining - 1)
        path.append(node)
        remaining -= 1
    span1set = set(span1)
    interior = tuple(v for v in path if v not in span1set and v not in span2set)
    return SdpResult(tuple(path), interior, True)


def first_order_neighbors(g: DepGraph, mention: EntityMention) -> list[int]:
    """Tokens adjacent to any span token, excluding the span itself, ascending."""
    span = set(mention.span)
    out = {w for t in span if t < g.n for w in g.adj[t]} - span
    return sorted(out)
