"""Compare constructed networks with reference networks and reference rankings."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyReference
from .fuzzy import similarity
from .gender import top_k
from .mentions import DEFAULT_THRESHOLD
from .network import MovieNetwork, edge_key
from .roster import normalize_name


@dataclass(frozen=True)
class CoverageReport:
    movie_id: str
    common_nodes: int
    # share of b's induced edges found in a, and vice versa
    coverage_ab: float | None
    coverage_ba: float | None
    matched_edges: int
    edges_a: int = 0
    edges_b: int = 0
    no_common_nodes: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def align_names(
    names_a: list[str],
    names_b: list[str],
    threshold: int = DEFAULT_THRESHOLD,
    fuzzy: bool = False,
) -> dict[str, str]:
    """One-to-one mapping a -> b, exact normalized names first, then greedy by similarity."""
    mapping: dict[str, str] = {}
    norm_b: dict[str, str] = {}
    for b in sorted(names_b):
        norm_b.setdefault(normalize_name(b), b)
    used_b: set[str] = set()
    for a in sorted(names_a):
        b = norm_b.get(normalize_name(a))
        if b is not None and b not in used_b:
            mapping[a] = b
            used_b.add(b)
    if fuzzy:
        rest_a = [a for a in sorted(names_a) if a not in mapping]
        rest_b = [b for b in sorted(names_b) if b not in used_b]
        scored = sorted(
            ((similarity(a, b), a, b) for a in rest_a for b in rest_b),
            key=lambda t: (-t[0], t[1], t[2]),
        )
        for score, a, b in scored:
            if score < threshold:
                break
            if a in mapping or b in used_b:
                continue
            mapping[a] = b
            used_b.add(b)
    return mapping


def _names(net: MovieNetwork) -> dict[str, str]:
    return {k: info.display_name or k for k, info in net.nodes.items()}


def edge_coverage(
    g: MovieNetwork,
    h: MovieNetwork,
    name_matcher_threshold: int = DEFAULT_THRESHOLD,
    fuzzy: bool = False,
) -> CoverageReport:
    """Edge coverage between two networks on the subgraphs induced by shared characters.

    ``coverage_ab`` is |E_g ∩ E_h| / |E_h| and ``coverage_ba`` is
    |E_g ∩ E_h| / |E_g|, both on the induced subgraphs; a coverage is None
    when its denominator is empty.
    """
    names_g, names_h = _names(g), _names(h)
    by_name_g = {v: k for k, v in names_g.items()}
    by_name_h = {v: k for k, v in names_h.items()}
    name_map = align_names(list(by_name_g), list(by_name_h), name_matcher_threshold, fuzzy)
    g_to_h = {by_name_g[a]: by_name_h[b] for a, b in name_map.items()}
    common = set(g_to_h)
    if not common:
        return CoverageReport(g.movie_id or h.movie_id, 0, None, None, 0, no_common_nodes=True)

    h_common = set(g_to_h.values())
    eg = {edge_key(g_to_h[u], g_to_h[v]) for u, v in g.edges if u in common and v in common}
    eh = {(u, v) for u, v in h.edges if u in h_common and v in h_common}
    matched = len(eg & eh)
    return CoverageReport(
        movie_id=g.movie_id or h.movie_id,
        common_nodes=len(common),
        coverage_ab=matched / len(eh) if eh else None,
        coverage_ba=matched / len(eg) if eg else None,
        matched_edges=matched,
        edges_a=len(eg),
        edges_b=len(eh),
    )


def top_k_overlap(
    net: MovieNetwork,
    reference_order: list[str],
    k: int,
    metric: str = "degree_centrality",
    threshold: int = DEFAULT_THRESHOLD,
    fuzzy: bool = False,
) -> int:
    """How many of the network's top ``k`` characters are among the first ``k`` reference names."""
    if not reference_order:
        raise EmptyReference("reference ranking is empty")
    if not 1 <= k <= len(reference_order):
        raise ValueError(f"k must lie in 1..{len(reference_order)}")
    names = _names(net)
    top_names = [names[v] for v in top_k(net, metric, k)]
    mapping = align_names(top_names, reference_order[:k], threshold, fuzzy)
    return len(mapping)
