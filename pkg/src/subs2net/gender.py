"""Gender representation: triangle census, top-k roles, degree ratio, Mann-Whitney U, trends."""
from __future__ import annotations

import csv
import io
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import EmptySample
from .metrics import VertexFeatures, vertex_features
from .network import MovieNetwork
from .roster import FEMALE, MALE, UNKNOWN

DEGREE_RATIO_LOW, DEGREE_RATIO_HIGH = 0.8, 1.2
EXACT_MWU_MAX_N = 12
RANK_DECIMALS = 12


@dataclass(frozen=True)
class TriangleCensus:
    counts: tuple[int, int, int, int]
    # triangles touching an unknown-gender node
    excluded: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def percents(self) -> tuple[float, float, float, float]:
        total = self.total
        if total == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return tuple(c / total for c in self.counts)


@dataclass(frozen=True)
class GenderSummary:
    female_count: int
    male_count: int
    unknown_count: int
    females_in_top10: int
    degree_ratio: float | None


@dataclass(frozen=True)
class DegreeRatioResult:
    ratio: float | None
    passed: bool
    female_total: float
    male_total: float
    flagged: bool = False


@dataclass(frozen=True)
class MannWhitneyResult:
    U: float
    p_two_sided: float
    exact: bool
    n_a: int = 0
    n_b: int = 0


def _genders(net: MovieNetwork) -> dict[str, str]:
    return {k: info.gender for k, info in net.nodes.items()}


def enumerate_triangles(adj: Mapping[str, Mapping[str, int]]) -> list[tuple[str, str, str]]:
    """Each closed triplet exactly once, as a sorted tuple."""
    out = []
    for u in sorted(adj):
        higher = sorted(w for w in adj[u] if w > u)
        for i, v in enumerate(higher):
            for w in higher[i + 1:]:
                if w in adj[v]:
                    out.append((u, v, w))
    return out


def triangle_census(net: MovieNetwork) -> TriangleCensus:
    genders = _genders(net)
    counts = [0, 0, 0, 0]
    excluded = 0
    for tri in enumerate_triangles(net.adjacency()):
        gs = [genders.get(v, UNKNOWN) for v in tri]
        if any(g not in (FEMALE, MALE) for g in gs):
            excluded += 1
            continue
        counts[gs.count(FEMALE)] += 1
    return TriangleCensus(tuple(counts), excluded)


TOP_K_METRICS = (
    "pagerank", "weighted_pagerank", "degree_centrality", "degree", "closeness",
    "betweenness", "weighted_betweenness", "clustering", "total_weight",
)


def top_k(
    net: MovieNetwork,
    metric: str = "pagerank",
    k: int = 10,
    vfeats: Mapping[str, VertexFeatures] | None = None,
) -> list[str]:
    """Top ``k`` characters by ``metric``; ties by total weight, then name."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric not in TOP_K_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if vfeats is None:
        vfeats = vertex_features(net)
    ranked = sorted(
        vfeats,
        key=lambda v: (
            -round(float(getattr(vfeats[v], metric)), RANK_DECIMALS),
            -vfeats[v].total_weight,
            v,
        ),
    )
    return ranked[:k]


def females_in_top10(net: MovieNetwork, vfeats: Mapping[str, VertexFeatures] | None = None) -> int:
    genders = _genders(net)
    return sum(1 for v in top_k(net, "pagerank", 10, vfeats) if genders[v] == FEMALE)


def degree_ratio_test(net: MovieNetwork, weighted: bool = True) -> DegreeRatioResult:
    """Female/male ratio of total (weighted) degree; passes strictly inside (0.8, 1.2)."""
    genders = _genders(net)
    totals = {FEMALE: 0.0, MALE: 0.0}
    for (u, v), e in net.edges.items():
        amount = e.weight if weighted else 1
        for node in (u, v):
            g = genders.get(node, UNKNOWN)
            if g in totals:
                totals[g] += amount
    f, m = totals[FEMALE], totals[MALE]
    if m == 0:
        return DegreeRatioResult(None, False, f, m, flagged=True)
    ratio = f / m
    return DegreeRatioResult(ratio, DEGREE_RATIO_LOW < ratio < DEGREE_RATIO_HIGH, f, m)


def gender_summary(net: MovieNetwork, vfeats: Mapping[str, VertexFeatures] | None = None) -> GenderSummary:
    genders = list(_genders(net).values())
    return GenderSummary(
        female_count=genders.count(FEMALE),
        male_count=genders.count(MALE),
        unknown_count=sum(1 for g in genders if g not in (FEMALE, MALE)),
        females_in_top10=females_in_top10(net, vfeats),
        degree_ratio=degree_ratio_test(net).ratio,
    )


# -- Mann-Whitney U ----------------------------------------------------------

def midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _u_from_ranks(ranks_a: Iterable[float], n_a: int) -> float:
    return sum(ranks_a) - n_a * (n_a + 1) / 2.0


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    exact: bool | None = None,
) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test; ``U`` is reported for ``sample_a``.

    With ``exact=None`` the null distribution is enumerated when the pooled
    size is at most 12 (all ways of assigning the pooled midranks to the
    first sample), and otherwise approximated by a normal with tie-corrected
    variance and continuity correction.
    """
    n_a, n_b = len(sample_a), len(sample_b)
    if n_a == 0 or n_b == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = [float(x) for x in sample_a] + [float(x) for x in sample_b]
    ranks = midranks(pooled)
    u = _u_from_ranks(ranks[:n_a], n_a)
    mean_u = n_a * n_b / 2.0
    n = n_a + n_b
    if exact is None:
        exact = n <= EXACT_MWU_MAX_N
    if exact:
        # ranks are multiples of 0.5, so compare doubled values as integers
        observed = abs(round(2 * u) - n_a * n_b)
        hits = total = 0
        offset = n_a * (n_a + 1)
        doubled = [round(2 * r) for r in ranks]
        for combo in combinations(range(n), n_a):
            dev = abs(sum(doubled[i] for i in combo) - offset - n_a * n_b)
            total += 1
            hits += dev >= observed
        return MannWhitneyResult(u, hits / total, True, n_a, n_b)

    tie_term = 0.0
    for count in _tie_counts(pooled):
        tie_term += count ** 3 - count
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return MannWhitneyResult(u, 1.0, False, n_a, n_b)
    z = max(abs(u - mean_u) - 0.5, 0.0) / math.sqrt(var)
    return MannWhitneyResult(u, min(1.0, 2.0 * _normal_sf(z)), False, n_a, n_b)


def _tie_counts(values: Iterable[float]) -> list[int]:
    counts: dict[float, int] = defaultdict(int)
    for v in values:
        counts[v] += 1
    return [c for c in counts.values() if c > 1]


def compare_by_gender(
    rows: Iterable[Mapping], feature: str, genre: str | None = None
) -> MannWhitneyResult:
    """Female vs male distribution of one per-character feature.

    ``rows`` are per-character records with ``gender``, ``genres`` and the
    feature column, e.g. the per-vertex rows of a corpus run.
    """
    female, male = [], []
    for row in rows:
        if genre is not None and genre not in row.get("genres", ()):
            continue
        value = row.get(feature)
        if value is None or value == "":
            continue
        if row["gender"] == FEMALE:
            female.append(float(value))
        elif row["gender"] == MALE:
            male.append(float(value))
    return mann_whitney_u(female, male)


# -- corpus trends -----------------------------------------------------------

GROUPINGS = ("year", "decade", "genre", "genre_decade")


@dataclass
class MovieStats:
    movie_id: str
    year: int | None
    genres: tuple[str, ...]
    stats: dict[str, float] = field(default_factory=dict)


def _group_keys(rec: MovieStats, group_by: str) -> list[tuple[str, ...]]:
    decade = None if rec.year is None else f"{rec.year // 10 * 10}s"
    genres = rec.genres or ("(none)",)
    if group_by == "year":
        return [(str(rec.year),)] if rec.year is not None else []
    if group_by == "decade":
        return [(decade,)] if decade else []
    if group_by == "genre":
        return [(g,) for g in genres]
    if group_by == "genre_decade":
        return [(g, decade) for g in genres] if decade else []
    raise ValueError(f"unknown grouping {group_by!r}; expected one of {GROUPINGS}")


def corpus_trends(
    records: Iterable[MovieStats],
    group_by: str = "decade",
    stat_names: Sequence[str] | None = None,
) -> list[dict]:
    """Group movies and report per-group mean and median of each statistic.

    A movie with several genres contributes to every one of its genre groups.
    """
    records = list(records)
    if stat_names is None:
        stat_names = sorted({k for r in records for k in r.stats})
    groups: dict[tuple[str, ...], list[MovieStats]] = defaultdict(list)
    for rec in records:
        for key in _group_keys(rec, group_by):
            groups[key].append(rec)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        row: dict = {"group_by": group_by, "group": "/".join(key)}
        row["n_movies"] = len(members)
        for stat in stat_names:
            vals = [m.stats[stat] for m in members if m.stats.get(stat) is not None]
            row[f"{stat}_mean"] = statistics.fmean(vals) if vals else None
            row[f"{stat}_median"] = statistics.median(vals) if vals else None
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict], columns: Sequence[str] | None = None) -> str:
    if columns is None:
        columns = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow(["" if r.get(c) is None else _cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple, set, frozenset)):
        return "|".join(sorted(map(str, x)))
    return str(x)


def movie_gender_stats(net: MovieNetwork, vfeats: Mapping[str, VertexFeatures] | None = None) -> dict[str, float]:
    """Per-movie statistics used for trend tables."""
    if vfeats is None:
        vfeats = vertex_features(net)
    census = triangle_census(net)
    summary = gender_summary(net, vfeats)
    top = top_k(net, "pagerank", 10, vfeats) if vfeats else []
    known = summary.female_count + summary.male_count
    stats = {
        "female_count": summary.female_count,
        "male_count": summary.male_count,
        "female_share": summary.female_count / known if known else None,
        "females_in_top10": summary.females_in_top10,
        "female_share_top10": summary.females_in_top10 / len(top) if top else None,
        "degree_ratio": summary.degree_ratio,
        "degree_ratio_pass": float(degree_ratio_test(net).passed),
    }
    for i, (c, p) in enumerate(zip(census.counts, census.percents)):
        stats[f"triangles_{i}_women"] = c
        stats[f"triangles_{i}_women_pct"] = p if census.total else None
    return stats
