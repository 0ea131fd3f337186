"""Gradient-boosted decision trees for binary classification (logistic loss).

Exact greedy split search over every distinct feature value, second-order
gain with L2 leaf regularization, Newton leaf weights ``-G / (H + lambda)``.
A sample goes left when ``x[feature] <= threshold``; thresholds are observed
training values, so any strictly increasing rescaling of a feature leaves the
tree's decisions unchanged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class GbtHyperParams:
    num_trees: int = 10
    max_depth: int = 1
    learning_rate: float = 0.3
    lambda_l2: float = 1.0
    gamma_leaf_penalty: float = 0.0
    min_samples_leaf: int = 10
    min_samples_split: int = 40
    class_balancing: bool = True

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.lambda_l2 < 0 or self.gamma_leaf_penalty < 0:
            raise ValueError("regularization terms must be >= 0")
        if self.min_samples_leaf < 1 or self.min_samples_split < 2:
            raise ValueError("min_samples_leaf >= 1 and min_samples_split >= 2 required")


@dataclass
class TreeNode:
    weight: float = 0.0
    feature: Optional[int] = None
    threshold: Optional[float] = None
    gain: float = 0.0
    n_samples: int = 0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.is_leaf:
            return np.full(len(X), self.weight)
        out = np.empty(len(X))
        go_left = X[:, self.feature] <= self.threshold
        out[go_left] = self.left.predict(X[go_left])
        out[~go_left] = self.right.predict(X[~go_left])
        return out

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def splits(self):
        if not self.is_leaf:
            yield self
            yield from self.left.splits()
            yield from self.right.splits()

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.weight, "n_samples": self.n_samples}
        return {"feature": self.feature, "threshold": self.threshold, "gain": self.gain,
                "n_samples": self.n_samples, "left": self.left.to_dict(),
                "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "leaf" in d:
            return cls(weight=float(d["leaf"]), n_samples=int(d.get("n_samples", 0)))
        return cls(feature=int(d["feature"]), threshold=float(d["threshold"]),
                   gain=float(d.get("gain", 0.0)), n_samples=int(d.get("n_samples", 0)),
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=np.float64)))


@dataclass
class BoostedTreeModel:
    trees: list = field(default_factory=list)
    base_score: float = 0.0
    learning_rate: float = 0.3
    n_features: Optional[int] = None
    feature_names: Optional[list] = None

    def margin(self, X) -> np.ndarray:
        X = self._check(X)
        z = np.full(len(X), self.base_score)
        for tree in self.trees:
            z += self.learning_rate * tree.predict(X)
        return z

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.margin(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def to_json(self) -> str:
        payload = {"base_score": self.base_score, "learning_rate": self.learning_rate,
                   "n_features": self.n_features, "feature_names": self.feature_names,
                   "trees": [t.to_dict() for t in self.trees]}
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BoostedTreeModel":
        d = json.loads(text)
        return cls(trees=[TreeNode.from_dict(t) for t in d["trees"]],
                   base_score=float(d["base_score"]),
                   learning_rate=float(d["learning_rate"]),
                   n_features=d.get("n_features"),
                   feature_names=d.get("feature_names"))


def split_gain(GL, HL, GR, HR, lam, gamma):
    G, H = GL + GR, HL + HR
    return 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam)) - gamma


TIE_TOL = 1e-9


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def best_split(X: np.ndarray, g: np.ndarray, h: np.ndarray, idx: np.ndarray,
               params: GbtHyperParams) -> Optional[Split]:
    """Highest-gain (feature, threshold) over the samples in ``idx``.

    Gains equal up to floating-point noise (relative ``TIE_TOL``) keep the
    first candidate in (feature, threshold) order. Returns None when no
    admissible split has positive gain.
    """
    n = len(idx)
    min_leaf = params.min_samples_leaf
    if n < params.min_samples_split or n < 2 * min_leaf:
        return None
    best: Optional[Split] = None
    gs, hs = g[idx], h[idx]
    G, H = gs.sum(), hs.sum()
    for j in range(X.shape[1]):
        xs = X[idx, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        GL = np.cumsum(gs[order])[:-1]
        HL = np.cumsum(hs[order])[:-1]
        n_left = np.arange(1, n)
        ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not ok.any():
            continue
        gains = split_gain(GL, HL, G - GL, H - HL, params.lambda_l2, params.gamma_leaf_penalty)
        gains = np.where(ok, gains, -np.inf)
        i = int(np.argmax(gains))
        if gains[i] > 0 and (best is None or gains[i] > best.gain * (1 + TIE_TOL)):
            best = Split(j, float(xs[i]), float(gains[i]))
    return best


def _grow(X, g, h, idx, depth, params) -> TreeNode:
    G, H = g[idx].sum(), h[idx].sum()
    node = TreeNode(weight=float(-G / (H + params.lambda_l2)), n_samples=len(idx))
    if depth >= params.max_depth:
        return node
    split = best_split(X, g, h, idx, params)
    if split is None:
        return node
    go_left = X[idx, split.feature] <= split.threshold
    node.feature, node.threshold, node.gain = split.feature, split.threshold, split.gain
    node.left = _grow(X, g, h, idx[go_left], depth + 1, params)
    node.right = _grow(X, g, h, idx[~go_left], depth + 1, params)
    return node


def sample_weights(y: np.ndarray, balanced: bool) -> np.ndarray:
    if not balanced:
        return np.ones(len(y))
    n_pos = y.sum()
    n_neg = len(y) - n_pos
    return np.where(y == 1, len(y) / (2.0 * n_pos), len(y) / (2.0 * n_neg))


def log_loss(y: np.ndarray, margin: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Weighted mean logistic loss, computed stably from margins."""
    losses = np.logaddexp(0.0, margin) - y * margin
    return float(np.average(losses, weights=weights))


def train(X, y, params: GbtHyperParams = GbtHyperParams(), feature_names=None,
          history: Optional[list] = None) -> BoostedTreeModel:
    """Fit an additive ensemble of regression trees to the logistic-loss gradients.

    If ``history`` is given, the training loss before the first round and after
    each round is appended to it.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("training data must contain both classes")

    w = sample_weights(y, params.class_balancing)
    prior = float(np.average(y, weights=w))
    base = float(np.log(prior / (1 - prior)))
    model = BoostedTreeModel(base_score=base, learning_rate=params.learning_rate,
                             n_features=X.shape[1],
                             feature_names=list(feature_names) if feature_names is not None else None)
    margin = np.full(len(y), base)
    idx = np.arange(len(y))
    if history is not None:
        history.append(log_loss(y, margin, w))
    for _ in range(params.num_trees):
        p = sigmoid(margin)
        g = w * (p - y)
        h = w * p * (1 - p)
        tree = _grow(X, g, h, idx, 0, params)
        model.trees.append(tree)
        margin = margin + params.learning_rate * tree.predict(X)
        if history is not None:
            history.append(log_loss(y, margin, w))
    return model


def feature_importance(model: BoostedTreeModel) -> list:
    """Total split gain per feature, scaled so the top feature scores 10.

    Returns ``(feature_index, name, score)`` sorted by descending score, ties
    by index.
    """
    n = model.n_features or 0
    totals = np.zeros(n)
    for tree in model.trees:
        for node in tree.splits():
            totals[node.feature] += node.gain
    top = totals.max() if n else 0.0
    scores = totals / top * 10 if top > 0 else totals
    names = model.feature_names or [f"f{i}" for i in range(n)]
    ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    return [(i, names[i], float(scores[i])) for i in ranked]
