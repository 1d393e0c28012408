"""Bechdel-test classifier: feature assembly, training, scoring and evaluation."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import KTooLarge, SchemaMismatch, SingleClassDataset, SingleClassTestSet, TooFewExamples
from .forest import ForestModel, ForestParams, fit_forest
from .gender import degree_ratio_test, females_in_top10, midranks, triangle_census
from .metrics import STAT_NAMES, VERTEX_FEATURE_NAMES, VertexFeatures, network_features, vertex_features
from .network import MovieNetwork, NodeInfo
from .roster import FEMALE, MALE, UNKNOWN, MovieRecord, RosterEntry

logger = logging.getLogger(__name__)

MIN_TRAINING_EXAMPLES = 20
DEFAULT_SEED = 42
DEFAULT_HOLDOUT = 300
DECISION_THRESHOLD = 0.5

NETWORK_FEATURES = ("edge_count", "vertex_count", "clique_count") + tuple(
    f"{feat}_{stat}" for feat in VERTEX_FEATURE_NAMES for stat in STAT_NAMES
)
GENDER_FEATURES = (
    "female_count", "male_count", "unknown_count",
    "triangles_0_women", "triangles_1_women", "triangles_2_women", "triangles_3_women",
    "triangles_0_women_pct", "triangles_1_women_pct", "triangles_2_women_pct", "triangles_3_women_pct",
    "females_in_top10", "degree_ratio",
)
FLAG_FEATURES = ("missing_vertex_stats", "missing_triangles", "missing_degree_ratio")
FEATURE_NAMES = NETWORK_FEATURES + GENDER_FEATURES + FLAG_FEATURES
MOVIE_FEATURES = ("release_year", "rating", "runtime_min", "votes")


@dataclass(frozen=True)
class LabeledMovie:
    movie_id: str
    features: dict[str, float]
    raw_score: int
    release_year: int | None = None

    @property
    def label(self) -> bool:
        return self.raw_score == 3


def _with_roster_genders(net: MovieNetwork, roster: Sequence[RosterEntry] | None) -> MovieNetwork:
    if not roster:
        return net
    by_key = {e.key: e for e in roster}
    if all(net.nodes[k].gender != UNKNOWN or k not in by_key for k in net.nodes):
        return net
    net = net.copy()
    for k, info in net.nodes.items():
        entry = by_key.get(k)
        if info.gender == UNKNOWN and entry is not None:
            net.nodes[k] = NodeInfo(info.display_name, entry.gender, info.actor_name or entry.actor_name)
    return net


def assemble_features(
    net: MovieNetwork,
    roster: Sequence[RosterEntry] | None = None,
    movie_record: MovieRecord | None = None,
    vfeats: Mapping[str, VertexFeatures] | None = None,
    include_movie_features: bool = False,
) -> dict[str, float]:
    """Fixed-order feature vector for one movie.

    Roster genders fill in nodes whose gender is unknown. Aggregates that do
    not exist (no vertices, no triangles, no male weight) become 0 and raise
    the matching ``missing_*`` flag.
    """
    net = _with_roster_genders(net, roster)
    if vfeats is None:
        vfeats = vertex_features(net)
    nfeats = network_features(net, dict(vfeats)).flat()
    features: dict[str, float] = {name: float(nfeats[name]) for name in NETWORK_FEATURES}

    genders = [info.gender for info in net.nodes.values()]
    census = triangle_census(net)
    ratio = degree_ratio_test(net)
    features.update(
        female_count=genders.count(FEMALE),
        male_count=genders.count(MALE),
        unknown_count=sum(1 for g in genders if g not in (FEMALE, MALE)),
    )
    for i in range(4):
        features[f"triangles_{i}_women"] = census.counts[i]
        features[f"triangles_{i}_women_pct"] = census.percents[i]
    features["females_in_top10"] = females_in_top10(net, vfeats) if vfeats else 0
    features["degree_ratio"] = ratio.ratio if ratio.ratio is not None else 0.0
    features["missing_vertex_stats"] = float(not vfeats)
    features["missing_triangles"] = float(census.total == 0)
    features["missing_degree_ratio"] = float(ratio.ratio is None)

    names = FEATURE_NAMES
    if include_movie_features:
        rec = movie_record or MovieRecord(net.movie_id)
        features["release_year"] = rec.release_year or 0
        features["rating"] = rec.rating or 0.0
        features["runtime_min"] = rec.runtime_min or 0
        features["votes"] = rec.votes
        names = FEATURE_NAMES + MOVIE_FEATURES
    return {k: float(features[k]) for k in names}


def load_labels(path: str | Path) -> dict[str, int]:
    """``movie_id,rating`` CSV with ratings 0-3."""
    labels: dict[str, int] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            movie_id = (row.get("movie_id") or row.get("imdbid") or "").strip()
            rating = int(row["rating"])
            if not 0 <= rating <= 3:
                raise ValueError(f"{movie_id}: Bechdel rating {rating} outside 0-3")
            labels[movie_id] = rating
    return labels


def _xy(dataset: Sequence[LabeledMovie], feature_names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    X = np.empty((len(dataset), len(feature_names)))
    for i, movie in enumerate(dataset):
        if list(movie.features) != list(feature_names):
            raise SchemaMismatch(f"{movie.movie_id}: feature schema differs")
        X[i] = [movie.features[n] for n in feature_names]
    y = np.array([m.label for m in dataset], dtype=float)
    return X, y


def train(
    dataset: Sequence[LabeledMovie],
    params: ForestParams | None = None,
    seed: int = DEFAULT_SEED,
) -> ForestModel:
    if len(dataset) < MIN_TRAINING_EXAMPLES:
        raise TooFewExamples(f"need at least {MIN_TRAINING_EXAMPLES} examples, got {len(dataset)}")
    labels = {m.label for m in dataset}
    if len(labels) < 2:
        raise SingleClassDataset("training data contains a single class")
    # sorting makes the model independent of input row order
    ordered = sorted(dataset, key=lambda m: m.movie_id)
    names = list(ordered[0].features)
    X, y = _xy(ordered, names)
    return fit_forest(X, y, names, params or ForestParams(), seed)


def predict_proba(model: ForestModel, features) -> np.ndarray | float:
    """Pass probability for one feature dict (float) or a list of them (array)."""
    if isinstance(features, Mapping):
        return float(model.predict_proba(dict(features))[0])
    return model.predict_proba([dict(f) for f in features])


def holdout_newest(dataset: Sequence[LabeledMovie], n: int = DEFAULT_HOLDOUT) -> tuple[list[LabeledMovie], list[LabeledMovie]]:
    """Split off the ``n`` most recent movies as a test set; the rest is training data."""
    ordered = sorted(dataset, key=lambda m: (m.release_year if m.release_year is not None else -1, m.movie_id))
    if n <= 0:
        return ordered, []
    return ordered[:-n], ordered[-n:]


def roc_auc(labels: Sequence[bool], scores: Sequence[float]) -> float:
    """AUC as the normalized Mann-Whitney statistic of positive-class scores (ties count half)."""
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTestSet("AUC is undefined when only one class is present")
    ranks = np.asarray(midranks(list(scores)))
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _prf(tp: int, fp: int, fn: int) -> dict[str, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def classification_report(labels: Sequence[bool], scores: Sequence[float]) -> dict:
    labels = np.asarray(labels, dtype=bool)
    pred = np.asarray(scores, dtype=float) >= DECISION_THRESHOLD
    tp = int((pred & labels).sum())
    fp = int((pred & ~labels).sum())
    fn = int((~pred & labels).sum())
    tn = int((~pred & ~labels).sum())
    try:
        auc = roc_auc(labels, scores)
    except SingleClassTestSet:
        auc = None
    return {
        "auc": auc,
        "accuracy": (tp + tn) / len(labels) if len(labels) else 0.0,
        "per_class": {"pass": _prf(tp, fp, fn), "fail": _prf(tn, fn, fp)},
        "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        "n": int(len(labels)),
    }


def evaluate(model: ForestModel, test: Sequence[LabeledMovie]) -> dict:
    if not test:
        raise ValueError("empty test set")
    scores = model.predict_proba([m.features for m in test])
    return classification_report([m.label for m in test], scores)


def precision_at_k(model: ForestModel, test: Sequence[LabeledMovie], k: int) -> float:
    """Accuracy over the ``k`` predictions with the highest max(p, 1-p)."""
    scores = model.predict_proba([m.features for m in test]) if test else np.array([])
    return precision_at_k_scores([m.label for m in test], scores, k, [m.movie_id for m in test])


def precision_at_k_scores(labels, scores, k: int, ids=None) -> float:
    n = len(labels)
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} outside 1..{n}")
    ids = list(ids) if ids is not None else list(range(n))
    conf = [max(p, 1.0 - p) for p in scores]
    order = sorted(range(n), key=lambda i: (-conf[i], ids[i]))[:k]
    correct = sum((scores[i] >= DECISION_THRESHOLD) == bool(labels[i]) for i in order)
    return correct / k


def feature_importance(model: ForestModel) -> list[tuple[str, float]]:
    imp = model.importances()
    pairs = [(name, float(v)) for name, v in zip(model.feature_names, imp)]
    return sorted(pairs, key=lambda p: (-p[1], p[0]))


def cross_validate(
    dataset: Sequence[LabeledMovie],
    params: ForestParams | None = None,
    folds: int = 5,
    seed: int = DEFAULT_SEED,
) -> dict:
    """Stratified k-fold evaluation; returns per-fold reports and out-of-fold scores."""
    ordered = sorted(dataset, key=lambda m: m.movie_id)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(ordered), dtype=int)
    for cls in (True, False):
        members = [i for i, m in enumerate(ordered) if m.label == cls]
        perm = rng.permutation(len(members))
        for rank, j in enumerate(perm):
            fold_of[members[j]] = rank % folds
    oof = np.zeros(len(ordered))
    reports = []
    for f in range(folds):
        tr = [m for m, g in zip(ordered, fold_of) if g != f]
        te_idx = [i for i, g in enumerate(fold_of) if g == f]
        model = train(tr, params, seed + f)
        scores = model.predict_proba([ordered[i].features for i in te_idx])
        oof[te_idx] = scores
        reports.append(classification_report([ordered[i].label for i in te_idx], scores))
    labels = [m.label for m in ordered]
    return {
        "folds": reports,
        "movie_ids": [m.movie_id for m in ordered],
        "labels": labels,
        "oof_scores": oof.tolist(),
        "overall": classification_report(labels, oof),
    }
