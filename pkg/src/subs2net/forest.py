"""Bagged Gini decision trees with per-split feature subsampling."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SchemaMismatch

MODEL_FORMAT = "subs2net-forest"
MODEL_VERSION = 1
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class ForestParams:
    tree_count: int = 200
    max_depth: int = 8
    min_leaf: int = 5
    # None means floor(sqrt(n_features))
    feature_subsample: int | None = None


def schema_hash(feature_names) -> str:
    return hashlib.sha256("\n".join(feature_names).encode("utf-8")).hexdigest()


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    gain: list[float] = field(default_factory=list)

    def _add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.gain.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            inner = feature[node] >= 0
            if not inner.any():
                break
            f = np.where(inner, feature[node], 0)
            go_left = X[rows, f] <= threshold[node]
            node = np.where(inner, np.where(go_left, left[node], right[node]), node)
        return np.asarray(self.value)[node]


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = np.divide(pos, n, out=np.zeros_like(pos, dtype=float), where=n > 0)
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, idx, features, min_leaf):
    n = len(idx)
    y_node = y[idx]
    parent = n * _gini(np.array([y_node.sum()], dtype=float), np.array([n], dtype=float))[0]
    best = (_MIN_GAIN, -1, 0.0)
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], y_node[order]
        cum = np.cumsum(ys)[:-1].astype(float)
        n_left = np.arange(1, n, dtype=float)
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        n_right = n - n_left
        child = n_left * _gini(cum, n_left) + n_right * _gini(ys.sum() - cum, n_right)
        gain = np.where(valid, parent - child, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best[0]:
            thr = (xs[i] + xs[i + 1]) / 2.0
            # adjacent floats can round the midpoint up onto the right value
            if not thr < xs[i + 1]:
                thr = xs[i]
            best = (float(gain[i]), int(f), float(thr))
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator) -> Tree:
    n_samples, n_features = X.shape
    mtry = params.feature_subsample or max(1, int(math.isqrt(n_features)))
    mtry = min(mtry, n_features)
    tree = Tree()
    boot = rng.integers(0, n_samples, n_samples)

    def grow(idx: np.ndarray, depth: int) -> int:
        pos = int(y[idx].sum())
        value = pos / len(idx)
        if depth >= params.max_depth or len(idx) < 2 * params.min_leaf or pos in (0, len(idx)):
            return tree._add_leaf(value)
        features = np.sort(rng.choice(n_features, mtry, replace=False))
        gain, f, thr = _best_split(X, y, idx, features, params.min_leaf)
        if f < 0:
            return tree._add_leaf(value)
        node = tree._add_leaf(value)
        mask = X[idx, f] <= thr
        tree.feature[node], tree.threshold[node], tree.gain[node] = f, thr, gain
        tree.left[node] = grow(idx[mask], depth + 1)
        tree.right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(boot, 0)
    return tree


@dataclass
class ForestModel:
    feature_names: list[str]
    trees: list[Tree]
    params: ForestParams
    seed: int

    def _matrix(self, rows) -> np.ndarray:
        if isinstance(rows, dict):
            rows = [rows]
        X = np.empty((len(rows), len(self.feature_names)))
        for i, row in enumerate(rows):
            if list(row) != self.feature_names:
                raise SchemaMismatch("feature names/order differ from the training schema")
            X[i] = [float(row[name]) for name in self.feature_names]
        return X

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def predict_proba(self, rows) -> np.ndarray:
        return self.predict_proba_matrix(self._matrix(rows))

    def importances(self) -> np.ndarray:
        total = np.zeros(len(self.feature_names))
        for tree in self.trees:
            per = np.zeros(len(self.feature_names))
            for f, g in zip(tree.feature, tree.gain):
                if f >= 0:
                    per[f] += g
            if per.sum() > 0:
                total += per / per.sum()
        return total / total.sum() if total.sum() > 0 else total

    def to_bytes(self) -> bytes:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "schema_hash": schema_hash(self.feature_names),
            "feature_names": self.feature_names,
            "params": asdict(self.params),
            "seed": self.seed,
            "trees": [asdict(t) for t in self.trees],
        }
        return json.dumps(doc, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes, expected_features=None) -> "ForestModel":
        doc = json.loads(data)
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise SchemaMismatch("not a subs2net forest model of a supported version")
        names = doc["feature_names"]
        if doc["schema_hash"] != schema_hash(names):
            raise SchemaMismatch("model schema hash does not match its feature list")
        if expected_features is not None and schema_hash(list(expected_features)) != doc["schema_hash"]:
            raise SchemaMismatch("model was trained on a different feature schema")
        return cls(names, [Tree(**t) for t in doc["trees"]], ForestParams(**doc["params"]), doc["seed"])


def fit_forest(X: np.ndarray, y: np.ndarray, feature_names, params: ForestParams, seed: int) -> ForestModel:
    # one independent stream per tree keeps results independent of scheduling
    trees = [
        fit_tree(X, y, params, np.random.default_rng(np.random.SeedSequence([seed, i])))
        for i in range(params.tree_count)
    ]
    return ForestModel(list(feature_names), trees, params, seed)
