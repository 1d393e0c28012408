import itertools
import random

import pytest

from conftest import network_from_adjacency, random_adjacency
from oracles import (
    mwu_exact_bitmask, mwu_exact_no_ties, triangle_census_oracle, u_statistic_pairs,
)
from subs2net.errors import EmptySample
from subs2net.gender import (
    MovieStats, compare_by_gender, corpus_trends, degree_ratio_test, females_in_top10,
    gender_summary, mann_whitney_u, midranks, rows_to_csv, top_k, triangle_census,
)


def gendered_graphs(count=100, seed=11):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(3, 30)
        adj = random_adjacency(rng, n, rng.choice([0.1, 0.3, 0.5, 0.8]))
        genders = {v: rng.choice(["female", "male", "male", "unknown"]) for v in adj}
        out.append((adj, genders))
    return out


SWAP = {"female": "male", "male": "female", "unknown": "unknown"}


@pytest.mark.parametrize("adj,genders", gendered_graphs())
def test_census_matches_enumeration(adj, genders):
    census = triangle_census(network_from_adjacency(adj, genders))
    counts, excluded = triangle_census_oracle(adj, genders)
    assert list(census.counts) == counts
    assert census.excluded == excluded
    if census.total:
        assert abs(sum(census.percents) - 1.0) <= 1e-12
    swapped = triangle_census(network_from_adjacency(adj, {v: SWAP[g] for v, g in genders.items()}))
    assert list(swapped.counts) == list(reversed(census.counts))


def _complete(names):
    return {a: {b: 1 for b in names if b != a} for a in names}


def test_census_examples():
    net = network_from_adjacency(_complete("abc"), dict.fromkeys("abc", "female"))
    assert triangle_census(net).counts == (0, 0, 0, 1)
    g = {"a": "male", "b": "male", "c": "female", "d": "female"}
    census = triangle_census(network_from_adjacency(_complete("abcd"), g))
    assert census.counts == (0, 2, 2, 0)
    assert census.percents == (0.0, 0.5, 0.5, 0.0)


def test_census_skips_unknown():
    g = {"a": "female", "b": "male", "c": "unknown"}
    census = triangle_census(network_from_adjacency(_complete("abc"), g))
    assert census.counts == (0, 0, 0, 0) and census.excluded == 1
    assert census.percents == (0.0, 0.0, 0.0, 0.0)


def test_top_k_rules():
    star = {"c": {"x": 1, "y": 1, "z": 1}, "x": {"c": 1}, "y": {"c": 1}, "z": {"c": 1}}
    net = network_from_adjacency(star)
    assert top_k(net, "degree_centrality", 10)[0] == "c"
    assert len(top_k(net, "pagerank", 10)) == 4
    # leaves tie on every metric and total weight
    assert top_k(net, "degree_centrality", 4) == ["c", "x", "y", "z"]
    assert top_k(net, "pagerank", 4) == top_k(net, "pagerank", 4)
    with pytest.raises(ValueError):
        top_k(net, "pagerank", 0)
    with pytest.raises(ValueError):
        top_k(net, "shoe_size", 3)


def test_females_in_top10():
    adj = _complete("abcde")
    assert females_in_top10(network_from_adjacency(adj, dict.fromkeys(adj, "female"))) == 5
    assert females_in_top10(network_from_adjacency(adj, dict.fromkeys(adj, "male"))) == 0


def test_degree_ratio():
    # f1-m1 weight 100: both sides get 100
    net = network_from_adjacency({"f": {"m": 100}, "m": {"f": 100}}, {"f": "female", "m": "male"})
    r = degree_ratio_test(net)
    assert r.ratio == 1.0 and r.passed
    # F=50, M=100
    adj = {"f": {"m": 50}, "m": {"f": 50, "n": 25}, "n": {"m": 25}}
    r = degree_ratio_test(network_from_adjacency(adj, {"f": "female", "m": "male", "n": "male"}))
    assert r.female_total == 50 and r.male_total == 100
    assert r.ratio == 0.5 and not r.passed
    adj = {"f": {"g": 3}, "g": {"f": 3}}
    r = degree_ratio_test(network_from_adjacency(adj, {"f": "female", "g": "female"}))
    assert r.ratio is None and not r.passed and r.flagged
    r = degree_ratio_test(network_from_adjacency({"f": {"m": 3}, "m": {"f": 3}}, {"f": "female", "m": "male"}), weighted=False)
    assert r.female_total == 1 and r.ratio == 1.0


def test_gender_summary_counts():
    g = {"a": "female", "b": "male", "c": "unknown"}
    s = gender_summary(network_from_adjacency(_complete("abc"), g))
    assert (s.female_count, s.male_count, s.unknown_count) == (1, 1, 1)
    assert s.females_in_top10 == 1


# -- Mann-Whitney ------------------------------------------------------------

def test_midranks():
    assert midranks([3, 1, 3, 2]) == [3.5, 1.0, 3.5, 2.0]


def test_mwu_examples():
    assert mann_whitney_u([1, 2, 3], [10, 11, 12]).U == 0
    res = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert res.U == 4.5 and res.p_two_sided == pytest.approx(1.0)
    with pytest.raises(EmptySample):
        mann_whitney_u([], [1])


def test_mwu_exact_all_sizes():
    rng = random.Random(5)
    for na in range(1, 10):
        for nb in range(1, 11 - na):
            for trial in range(3):
                if trial == 0:
                    vals = rng.sample(range(100), na + nb)
                else:
                    vals = [rng.randint(0, 4) for _ in range(na + nb)]
                a, b = vals[:na], vals[na:]
                res = mann_whitney_u(a, b)
                assert res.exact
                assert res.U == u_statistic_pairs(a, b)
                assert res.p_two_sided == pytest.approx(mwu_exact_bitmask(a, b), abs=1e-12)
                if len(set(vals)) == len(vals):
                    assert res.p_two_sided == pytest.approx(float(mwu_exact_no_ties(res.U, na, nb)), abs=1e-12)


def test_mwu_u_complement_with_ties():
    rng = random.Random(17)
    for _ in range(1000):
        a = [rng.randint(0, 5) for _ in range(rng.randint(1, 15))]
        b = [rng.randint(0, 5) for _ in range(rng.randint(1, 15))]
        assert mann_whitney_u(a, b).U + mann_whitney_u(b, a).U == len(a) * len(b)


def test_mwu_normal_approximation():
    a = list(range(20))
    b = [x + 0.5 for x in range(20)]
    res = mann_whitney_u(a, b)
    assert not res.exact
    assert res.U == u_statistic_pairs(a, b)
    assert 0.7 < res.p_two_sided <= 1.0
    far = mann_whitney_u(list(range(20)), list(range(100, 120)))
    assert far.U == 0 and far.p_two_sided < 1e-6
    # all values tied: zero variance
    assert mann_whitney_u([1] * 10, [1] * 10).p_two_sided == 1.0


def test_compare_by_gender_filters_genre():
    rows = [
        {"gender": "female", "genres": ["Action"], "closeness": 0.1},
        {"gender": "female", "genres": ["Drama"], "closeness": 0.9},
        {"gender": "male", "genres": ["Action"], "closeness": 0.5},
        {"gender": "unknown", "genres": ["Action"], "closeness": 0.7},
    ]
    res = compare_by_gender(rows, "closeness", genre="Action")
    assert (res.n_a, res.n_b, res.U) == (1, 1, 0.0)
    assert compare_by_gender(rows, "closeness").n_a == 2


# -- trends ------------------------------------------------------------------

def test_corpus_trends_grouping():
    recs = [
        MovieStats("a", 1994, ("Action", "Drama"), {"x": 1.0}),
        MovieStats("b", 1999, ("Drama",), {"x": 3.0}),
        MovieStats("c", 2003, ("Drama",), {"x": 5.0}),
    ]
    rows = corpus_trends(recs[:1], "year")
    assert len(rows) == 1 and rows[0]["group"] == "1994"
    by_genre = {r["group"]: r for r in corpus_trends(recs, "genre")}
    assert by_genre["Action"]["n_movies"] == 1
    assert by_genre["Drama"]["n_movies"] == 3 and by_genre["Drama"]["x_mean"] == 3.0
    by_decade = {r["group"]: r for r in corpus_trends(recs, "decade")}
    assert by_decade["1990s"]["x_median"] == 2.0
    gd = {r["group"] for r in corpus_trends(recs, "genre_decade")}
    assert gd == {"Action/1990s", "Drama/1990s", "Drama/2000s"}
    with pytest.raises(ValueError):
        corpus_trends(recs, "planet")
    text = rows_to_csv(corpus_trends(recs, "decade"))
    assert text.splitlines()[0] == "group_by,group,n_movies,x_mean,x_median"
