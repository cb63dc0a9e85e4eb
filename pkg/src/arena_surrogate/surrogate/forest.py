"""From-scratch random forest regressor (bagged CART trees, variance splits)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import kernels
from ..core import derive_rng

FORMAT = "arena-surrogate-forest"
VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    feature_fraction: float = 1 / 3
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must lie in (0, 1]")

    def m_try(self, p: int) -> int:
        return min(p, max(1, math.ceil(p * self.feature_fraction - 1e-12)))


@dataclass(frozen=True)
class RegressionTree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            r = rows[inner]
            n = node[inner]
            go_left = X[r, f[inner]] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def to_json(self) -> dict:
        nodes = []
        for k in range(self.n_nodes):
            if self.feature[k] < 0:
                nodes.append({"leaf": float(self.value[k])})
            else:
                nodes.append({
                    "feature": int(self.feature[k]),
                    "threshold": float(self.threshold[k]),
                    "left": int(self.left[k]),
                    "right": int(self.right[k]),
                    "gain": float(self.gain[k]),
                    "value": float(self.value[k]),
                })
        return {"nodes": nodes}

    @classmethod
    def from_json(cls, obj: dict) -> "RegressionTree":
        nodes = obj["nodes"]
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        value = np.zeros(n)
        gain = np.zeros(n)
        for k, nd in enumerate(nodes):
            if "leaf" in nd:
                value[k] = nd["leaf"]
            else:
                feature[k] = nd["feature"]
                threshold[k] = nd["threshold"]
                left[k] = nd["left"]
                right[k] = nd["right"]
                gain[k] = nd["gain"]
                value[k] = nd["value"]
        return cls(feature, threshold, left, right, value, gain)


@dataclass
class RegressionForest:
    trees: list[RegressionTree]
    feature_names: tuple[str, ...]
    params: ForestParams
    seed: int
    # (n_trees, n_train) bootstrap multiplicities; only kept in memory
    inbag: np.ndarray | None = field(default=None, repr=False)
    train_X: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def predict(self, X) -> np.ndarray:
        X = self._check(X)
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def oob_predict(self) -> np.ndarray:
        """Out-of-bag prediction for each training row (NaN if never left out)."""
        if self.inbag is None or self.train_X is None:
            raise ValueError("out-of-bag data is only available on a freshly trained forest")
        preds = np.array([t.predict(self.train_X) for t in self.trees])
        out_mask = self.inbag == 0
        n_out = out_mask.sum(axis=0)
        total = np.where(out_mask, preds, 0.0).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n_out > 0, total / np.maximum(n_out, 1), np.nan)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "feature_names": list(self.feature_names),
            "params": asdict(self.params),
            "seed": self.seed,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RegressionForest":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ValueError(f"not a {FORMAT} v{VERSION} document")
        return cls(
            [RegressionTree.from_json(t) for t in obj["trees"]],
            tuple(obj["feature_names"]),
            ForestParams(**obj["params"]),
            int(obj["seed"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def fit_tree(X, y, rng: np.random.Generator, params: ForestParams) -> tuple[RegressionTree, np.ndarray]:
    """One bagged tree; returns the tree and the bootstrap multiplicity of each row."""
    n, p = X.shape
    if params.bootstrap:
        idx = rng.integers(0, n, size=n)
    else:
        idx = np.arange(n)
    keys = rng.random((2 * n - 1, p))
    feature, threshold, left, right, value, gain, _ = kernels.build_tree(
        X[idx], y[idx], keys, params.max_depth, params.min_leaf, params.m_try(p))
    return RegressionTree(feature, threshold, left, right, value, gain), np.bincount(idx, minlength=n)


def fit_forest(X, y, feature_names, params: ForestParams = ForestParams(), seed: int = 0,
               label: str = "forest") -> RegressionForest:
    """Bagged regression trees; tree t draws from the ``(seed, "<label>/tree-<t>")`` stream."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, p) and y of length n")
    if X.shape[0] < 2:
        raise ValueError("need at least two training rows")
    if len(feature_names) != X.shape[1]:
        raise ValueError("one feature name per column required")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data must be finite")
    trees, inbag = [], []
    for t in range(params.n_trees):
        tree, counts = fit_tree(X, y, derive_rng(seed, f"{label}/tree-{t}"), params)
        trees.append(tree)
        inbag.append(counts)
    return RegressionForest(trees, tuple(getattr(f, "value", f) for f in feature_names), params, seed, np.array(inbag), X)


def train_forest(train, params: ForestParams = ForestParams(), seed: int = 0,
                 label: str = "forest") -> RegressionForest:
    """Fit on a :class:`TrainingSet`."""
    return fit_forest(train.X, train.y, train.feature_names, params, seed, label)


def predict(forest: RegressionForest, x) -> float | np.ndarray:
    out = forest.predict(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def feature_importance(forest: RegressionForest) -> dict[str, float]:
    """Total SSE reduction per feature, averaged over trees and normalised to 1.

    All zeros when no tree ever split.
    """
    totals = np.zeros(forest.n_features)
    for t in forest.trees:
        inner = t.feature >= 0
        np.add.at(totals, t.feature[inner], t.gain[inner])
    totals /= len(forest.trees)
    s = totals.sum()
    if s > 0:
        totals = totals / s
    return {name: float(v) for name, v in zip(forest.feature_names, totals)}
