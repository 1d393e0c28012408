"""Vertex and network features of a character network."""
from __future__ import annotations

import csv
import heapq
import io
from collections import deque
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from itertools import count

import numpy as np

from .errors import EmptyInput, UnknownVertex
from .network import MovieNetwork

Adjacency = dict[str, dict[str, int]]

DEFAULT_DAMPING = 0.85
PAGERANK_TOL = 1e-12
PAGERANK_MAX_ITER = 1000


def _adj(net: MovieNetwork | Adjacency) -> Adjacency:
    return net.adjacency() if isinstance(net, MovieNetwork) else net


def _check(adj: Adjacency, v: str) -> None:
    if v not in adj:
        raise UnknownVertex(v)


def total_weight(net: MovieNetwork | Adjacency, v: str) -> int:
    adj = _adj(net)
    _check(adj, v)
    return sum(adj[v].values())


def _bfs_distances(adj: Adjacency, source: str) -> dict[str, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def closeness(net: MovieNetwork | Adjacency, v: str) -> float:
    """1 / (sum of hop distances to every vertex reachable from ``v``); 0 when isolated."""
    adj = _adj(net)
    _check(adj, v)
    total = sum(_bfs_distances(adj, v).values())
    return 1.0 / total if total else 0.0


def _single_source_unweighted(adj: Adjacency, s: str):
    order, preds = [], {v: [] for v in adj}
    sigma = dict.fromkeys(adj, 0)
    dist = {s: 0}
    sigma[s] = 1
    queue = deque([s])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return order, preds, sigma


def _single_source_weighted(adj: Adjacency, s: str):
    # exact rational lengths so equal-length paths tie exactly
    order, preds = [], {v: [] for v in adj}
    sigma = dict.fromkeys(adj, 0)
    dist: dict[str, Fraction] = {}
    seen = {s: Fraction(0)}
    sigma[s] = 1
    tie = count()
    heap = [(Fraction(0), next(tie), s, s)]
    while heap:
        d, _, pred, v = heapq.heappop(heap)
        if v in dist:
            continue
        sigma[v] += sigma[pred] if pred != v else 0
        order.append(v)
        dist[v] = d
        for w, weight in adj[v].items():
            vw = d + Fraction(1, weight)
            if w not in dist and (w not in seen or vw < seen[w]):
                seen[w] = vw
                heapq.heappush(heap, (vw, next(tie), v, w))
                sigma[w] = 0
                preds[w] = [v]
            elif vw == seen.get(w) and w not in dist:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return order, preds, sigma


def betweenness_all(net: MovieNetwork | Adjacency, weighted: bool = False, normalized: bool = True) -> dict[str, float]:
    """Brandes betweenness for every vertex.

    Weighted mode measures path length as the sum of 1/weight over edges.
    Normalization divides the undirected pair count by (n-1)(n-2)/2.
    """
    adj = _adj(net)
    bc = dict.fromkeys(adj, 0.0)
    for s in sorted(adj):
        order, preds, sigma = (_single_source_weighted if weighted else _single_source_unweighted)(adj, s)
        delta = dict.fromkeys(adj, 0.0)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    n = len(adj)
    if normalized:
        scale = 1.0 / ((n - 1) * (n - 2)) if n > 2 else 0.0
    else:
        scale = 0.5
    return {v: b * scale for v, b in bc.items()}


def betweenness(net: MovieNetwork | Adjacency, v: str, weighted: bool = False, normalized: bool = True) -> float:
    adj = _adj(net)
    _check(adj, v)
    return betweenness_all(adj, weighted, normalized)[v]


def degree_centrality(net: MovieNetwork | Adjacency, v: str) -> float:
    adj = _adj(net)
    _check(adj, v)
    n = len(adj)
    return len(adj[v]) / (n - 1) if n > 1 else 0.0


def triangles_at(adj: Adjacency, v: str) -> int:
    nbrs = sorted(adj[v])
    return sum(1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b in adj[a])


def clustering(net: MovieNetwork | Adjacency, v: str) -> float:
    adj = _adj(net)
    _check(adj, v)
    k = len(adj[v])
    if k < 2:
        return 0.0
    return 2.0 * triangles_at(adj, v) / (k * (k - 1))


def pagerank(
    net: MovieNetwork | Adjacency,
    damping: float = DEFAULT_DAMPING,
    weighted: bool = False,
    tol: float = PAGERANK_TOL,
    max_iter: int = PAGERANK_MAX_ITER,
) -> dict[str, float]:
    """Power-iteration PageRank on the undirected graph.

    Each undirected edge acts as two arcs. Weighted mode spreads a vertex's
    rank in proportion to edge weight. Rank held by isolated vertices is
    spread uniformly. Stops once the L1 change drops below ``tol``.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    adj = _adj(net)
    nodes = sorted(adj)
    n = len(nodes)
    if n == 0:
        return {}
    pos = {v: i for i, v in enumerate(nodes)}
    out_w = np.zeros(n)
    arcs_src, arcs_dst, arcs_w = [], [], []
    for v in nodes:
        for w, weight in adj[v].items():
            arcs_src.append(pos[v])
            arcs_dst.append(pos[w])
            arcs_w.append(float(weight) if weighted else 1.0)
    src = np.array(arcs_src, dtype=int)
    dst = np.array(arcs_dst, dtype=int)
    wts = np.array(arcs_w)
    np.add.at(out_w, src, wts)
    dangling = out_w == 0
    share = np.divide(wts, out_w[src], out=np.zeros_like(wts), where=out_w[src] > 0)

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = np.full(n, (1.0 - damping) / n + damping * x[dangling].sum() / n)
        np.add.at(new, dst, damping * x[src] * share)
        delta = np.abs(new - x).sum()
        x = new
        if delta < tol:
            break
    return {v: float(x[pos[v]]) for v in nodes}


def bron_kerbosch_cliques(adj: Adjacency) -> list[frozenset[str]]:
    """All maximal cliques (Bron-Kerbosch with Tomita pivoting), isolated vertices included."""
    cliques: list[frozenset[str]] = []
    nbrs = {v: set(adj[v]) - {v} for v in adj}

    def expand(r: set[str], p: set[str], x: set[str]) -> None:
        if not p and not x:
            cliques.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: (len(p & nbrs[u]), u))
        for v in sorted(p - nbrs[pivot]):
            expand(r | {v}, p & nbrs[v], x & nbrs[v])
            p = p - {v}
            x = x | {v}

    if adj:
        expand(set(), set(adj), set())
    return cliques


def count_maximal_cliques(net: MovieNetwork | Adjacency) -> int:
    return len(bron_kerbosch_cliques(_adj(net)))


STAT_NAMES = ("mean", "median", "std", "min", "max", "q1", "q3")


def aggregate(values) -> dict[str, float]:
    """Mean, median, population std, extremes and linearly interpolated quartiles."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise EmptyInput("aggregate needs at least one value")
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "mean": float(arr.mean()),
        "median": float(med),
        "std": float(arr.std()),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "q1": float(q1),
        "q3": float(q3),
    }


@dataclass(frozen=True)
class VertexFeatures:
    total_weight: int
    closeness: float
    betweenness: float
    weighted_betweenness: float
    degree: int
    degree_centrality: float
    clustering: float
    pagerank: float
    weighted_pagerank: float


VERTEX_FEATURE_NAMES = tuple(f.name for f in fields(VertexFeatures))


@dataclass(frozen=True)
class NetworkFeatures:
    edge_count: int
    vertex_count: int
    clique_count: int
    aggregates: dict[str, dict[str, float]]

    def flat(self) -> dict[str, float]:
        row: dict[str, float] = {
            "edge_count": self.edge_count,
            "vertex_count": self.vertex_count,
            "clique_count": self.clique_count,
        }
        for feat in VERTEX_FEATURE_NAMES:
            stats = self.aggregates.get(feat, {})
            for stat in STAT_NAMES:
                row[f"{feat}_{stat}"] = stats.get(stat, 0.0)
        return row


def vertex_features(net: MovieNetwork | Adjacency, damping: float = DEFAULT_DAMPING) -> dict[str, VertexFeatures]:
    adj = _adj(net)
    bc = betweenness_all(adj)
    wbc = betweenness_all(adj, weighted=True)
    pr = pagerank(adj, damping)
    wpr = pagerank(adj, damping, weighted=True)
    n = len(adj)
    out = {}
    for v in sorted(adj):
        k = len(adj[v])
        out[v] = VertexFeatures(
            total_weight=sum(adj[v].values()),
            closeness=closeness(adj, v),
            betweenness=bc[v],
            weighted_betweenness=wbc[v],
            degree=k,
            degree_centrality=k / (n - 1) if n > 1 else 0.0,
            clustering=clustering(adj, v),
            pagerank=pr[v],
            weighted_pagerank=wpr[v],
        )
    return out


def network_features(
    net: MovieNetwork | Adjacency, vfeats: dict[str, VertexFeatures] | None = None
) -> NetworkFeatures:
    adj = _adj(net)
    if vfeats is None:
        vfeats = vertex_features(adj)
    edge_count = sum(len(nb) for nb in adj.values()) // 2
    aggs = {}
    if vfeats:
        for feat in VERTEX_FEATURE_NAMES:
            aggs[feat] = aggregate(getattr(vf, feat) for vf in vfeats.values())
    return NetworkFeatures(edge_count, len(adj), count_maximal_cliques(adj), aggs)


FEATURE_CSV_COLUMNS = ("movie_id", "level", "character") + VERTEX_FEATURE_NAMES


def features_csv(movie_id: str, vfeats: dict[str, VertexFeatures], nfeats: NetworkFeatures) -> str:
    """One row per vertex followed by a network row with ``feature_stat`` columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    net_row = nfeats.flat()
    net_cols = list(net_row)
    writer.writerow(list(FEATURE_CSV_COLUMNS) + net_cols)
    for v, vf in vfeats.items():
        d = asdict(vf)
        writer.writerow([movie_id, "vertex", v] + [_fmt(d[c]) for c in VERTEX_FEATURE_NAMES] + [""] * len(net_cols))
    writer.writerow([movie_id, "network", ""] + [""] * len(VERTEX_FEATURE_NAMES) + [_fmt(net_row[c]) for c in net_cols])
    return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)
