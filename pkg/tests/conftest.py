from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from subs2net.network import MovieNetwork, NodeInfo  # noqa: E402

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"


def random_adjacency(rng: random.Random, n: int, p: float, max_weight: int = 4) -> dict[str, dict[str, int]]:
    names = [f"v{i}" for i in range(n)]
    adj = {v: {} for v in names}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                w = rng.randint(1, max_weight)
                adj[names[i]][names[j]] = w
                adj[names[j]][names[i]] = w
    return adj


def network_from_adjacency(adj, genders=None, movie_id="m") -> MovieNetwork:
    net = MovieNetwork(movie_id)
    for v in adj:
        net.add_node(v, NodeInfo(v, (genders or {}).get(v, "unknown")))
    for u in adj:
        for v, w in adj[u].items():
            if u < v:
                for t in range(w):
                    net.add_interaction(u, v, t)
    return net


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


def build_golden_networks(t_window_s: int = 60, w_min: int = 1) -> dict:
    """Golden corpus networks built stage by stage from the raw files."""
    from subs2net.config import PipelineConfig, load_manifest
    from subs2net.mentions import find_mentions, load_external_entities
    from subs2net.network import build_network
    from subs2net.pipeline import load_corpus_roster
    from subs2net.roster import roster_for_movie
    from subs2net.subtitles import parse_srt

    manifest = load_manifest(GOLDEN / "manifest.json")
    entries = load_corpus_roster(manifest, PipelineConfig())
    out = {}
    for spec in manifest.movies:
        roster = roster_for_movie(entries, spec.roster_id)
        doc = parse_srt(spec.srt_path.read_bytes(), spec.movie_id)
        ext = load_external_entities(spec.ner_path, doc) if spec.ner_path else None
        mentions = find_mentions(doc, roster, 85, ext)
        out[spec.movie_id] = build_network(mentions, roster, t_window_s, w_min, spec.movie_id)
    return out


def synthetic_bechdel_corpus(n: int = 1000, seed: int = 0) -> list:
    """Random gendered networks labeled pass iff more than five women are in the cast."""
    from subs2net.bechdel import LabeledMovie, assemble_features

    rng = random.Random(seed)
    out = []
    for i in range(n):
        size = rng.randint(6, 14)
        adj = random_adjacency(rng, size, rng.uniform(0.2, 0.6))
        genders = {v: rng.choice(["female", "male"]) for v in adj}
        females = sum(g == "female" for g in genders.values())
        raw = 3 if females > 5 else rng.randint(0, 2)
        net = network_from_adjacency(adj, genders, movie_id=f"s{i:04d}")
        out.append(LabeledMovie(f"s{i:04d}", assemble_features(net), raw, 1950 + rng.randint(0, 70)))
    return out


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, float]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (report.when == "call" or report.failed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append((doc, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for doc, outcome, duration in _ACCEPTANCE:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {doc}  ({duration:.2f} s)")
