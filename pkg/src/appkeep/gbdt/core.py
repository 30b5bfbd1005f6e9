"""Gradient-boosted regression trees for binary classification.

Second-order boosting on the logistic loss with exact greedy split finding:
every midpoint between consecutive distinct feature values is scored by

    gain = 1/2 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma

and ties resolve to the lowest feature index, then the lowest threshold.
Trees grow depth-wise to a fixed maximum depth; leaf weights are
-G/(H+lambda) scaled by the learning rate.  Training is bit-reproducible:
rows are scanned in a canonical (value, g, h) order, so even permuting the
training rows leaves the model unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import scan_column


@dataclass(frozen=True)
class TrainParams:
    n_trees: int
    max_depth: int
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    gamma_min_gain: float = 0.0
    min_child_weight: float = 1.0
    base_score: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.l2_lambda < 0 or self.gamma_min_gain < 0 or self.min_child_weight < 0:
            raise ValueError("regularization parameters must be >= 0")
        if not 0.0 < self.base_score < 1.0:
            raise ValueError("base_score must lie in (0, 1)")


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    g_left: float
    h_left: float
    g_right: float
    h_right: float
    n_left: int
    n_right: int


class Tree:
    """One regression tree as parallel node arrays; node 0 is the root and
    feature < 0 marks a leaf.  Routing rule: value < threshold goes left."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int32)
        active = self.feature[idx] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            nodes = idx[rows]
            go_left = X[rows, self.feature[nodes]] < self.threshold[nodes]
            idx[rows] = np.where(go_left, self.left[nodes], self.right[nodes])
            active = self.feature[idx] >= 0
        return self.value[idx]

    def max_path_depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=np.int64)
        deepest = 0
        for node in range(len(self.feature)):  # children follow parents
            if self.feature[node] >= 0:
                for child in (self.left[node], self.right[node]):
                    depth[child] = depth[node] + 1
                    deepest = max(deepest, int(depth[child]))
        return deepest

    def to_nodes(self) -> list[dict]:
        nodes = []
        for i in range(len(self.feature)):
            if self.feature[i] < 0:
                nodes.append({"leaf": float(self.value[i])})
            else:
                nodes.append(
                    {
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                    }
                )
        return nodes

    @classmethod
    def from_nodes(cls, nodes: list[dict]) -> "Tree":
        count = len(nodes)
        feature = np.full(count, -1, dtype=np.int32)
        threshold = np.zeros(count, dtype=np.float64)
        left = np.zeros(count, dtype=np.int32)
        right = np.zeros(count, dtype=np.int32)
        value = np.zeros(count, dtype=np.float64)
        for i, node in enumerate(nodes):
            if "leaf" in node:
                value[i] = float(node["leaf"])
            else:
                feature[i] = int(node["feature"])
                threshold[i] = float(node["threshold"])
                left[i] = int(node["left"])
                right[i] = int(node["right"])
                if not (0 <= left[i] < count and 0 <= right[i] < count):
                    raise ValueError(f"node {i}: child index out of range")
        return cls(feature, threshold, left, right, value)


@dataclass
class GBDTModel:
    params: TrainParams
    trees: list[Tree]
    feature_count: int
    gain_totals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def sigmoid(margin):
    # tanh form: stable for any margin without overflow.
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(margin, dtype=np.float64)))


def log_odds(probability: float) -> float:
    return math.log(probability / (1.0 - probability))


def logistic_grad_hess(margin, label):
    """Gradient and hessian of the pointwise logistic loss at a margin:
    g = p - y and h = p(1-p) with p = sigmoid(margin)."""
    p = sigmoid(margin)
    return p - label, p * (1.0 - p)


def _scan_sorted(values, g, h, params: TrainParams):
    order = np.lexsort((h, g, values))
    vals = np.ascontiguousarray(values[order])
    gs = np.ascontiguousarray(g[order])
    hs = np.ascontiguousarray(h[order])
    return scan_column(vals, gs, hs, params.l2_lambda, params.gamma_min_gain, params.min_child_weight)


def _candidate(feature: int, hit, n: int) -> SplitCandidate:
    pos, threshold, gain, gl, hl, gt, ht = hit
    return SplitCandidate(
        feature=feature,
        threshold=threshold,
        gain=gain,
        g_left=gl,
        h_left=hl,
        g_right=gt - gl,
        h_right=ht - hl,
        n_left=pos + 1,
        n_right=n - (pos + 1),
    )


def best_split(values: np.ndarray, g: np.ndarray, h: np.ndarray, params: TrainParams) -> Optional[SplitCandidate]:
    """Best split of a single feature column, or None when no midpoint yields
    positive gain with both children at or above min_child_weight."""
    values = np.asarray(values, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if not (values.shape == g.shape == h.shape):
        raise ValueError("values, g, h must be aligned")
    hit = _scan_sorted(values, g, h, params)
    return None if hit is None else _candidate(0, hit, len(values))


def best_split_all(X: np.ndarray, g: np.ndarray, h: np.ndarray, params: TrainParams) -> Optional[SplitCandidate]:
    """Best split over every feature column; ties go to the lowest feature
    index, then the lowest threshold."""
    X = np.asarray(X, dtype=np.float64)
    best: Optional[SplitCandidate] = None
    for f in range(X.shape[1]):
        hit = _scan_sorted(X[:, f], g, h, params)
        if hit is not None and (best is None or hit[2] > best.gain):
            best = _candidate(f, hit, X.shape[0])
    return best


def _exact_sum(values: np.ndarray) -> float:
    # fsum is exact, hence independent of row order.
    return math.fsum(values)


def _grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    orders: list[np.ndarray],
    params: TrainParams,
    gain_totals: np.ndarray,
    margins: np.ndarray,
) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(0)
        right.append(0)
        value.append(0.0)
        return len(feature) - 1

    def make_leaf(node: int, mask: np.ndarray) -> None:
        G = _exact_sum(g[mask])
        H = _exact_sum(h[mask])
        weight = params.learning_rate * (-G / (H + params.l2_lambda))
        value[node] = weight
        margins[mask] += weight

    root = new_node()
    level = [(root, np.ones(X.shape[0], dtype=bool), 0)]
    while level:
        next_level = []
        for node, mask, depth in level:
            if depth >= params.max_depth or int(mask.sum()) < 2:
                make_leaf(node, mask)
                continue
            best: Optional[SplitCandidate] = None
            for f in range(X.shape[1]):
                order = orders[f]
                rows = order[mask[order]]
                hit = scan_column(
                    np.ascontiguousarray(X[rows, f]),
                    np.ascontiguousarray(g[rows]),
                    np.ascontiguousarray(h[rows]),
                    params.l2_lambda,
                    params.gamma_min_gain,
                    params.min_child_weight,
                )
                if hit is not None and (best is None or hit[2] > best.gain):
                    best = _candidate(f, hit, rows.size)
            if best is None:
                make_leaf(node, mask)
                continue
            go_left = mask & (X[:, best.feature] < best.threshold)
            go_right = mask & ~(X[:, best.feature] < best.threshold)
            if not go_left.any() or not go_right.any():
                # Midpoint rounded onto a boundary value; nothing to separate.
                make_leaf(node, mask)
                continue
            feature[node] = best.feature
            threshold[node] = best.threshold
            left[node] = new_node()
            right[node] = new_node()
            gain_totals[best.feature] += best.gain
            next_level.append((left[node], go_left, depth + 1))
            next_level.append((right[node], go_right, depth + 1))
        level = next_level
    return Tree(feature, threshold, left, right, value)


def train(X: np.ndarray, y: np.ndarray, params: TrainParams) -> GBDTModel:
    """Fit n_trees boosting rounds.  Deterministic: the same data and
    parameters produce a bit-identical model, in any row order."""
    params.validate()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    classes = np.unique(y)
    if not np.array_equal(classes, [0.0, 1.0]):
        raise ValueError("training labels must contain both classes 0 and 1")

    n, width = X.shape
    margins = np.full(n, log_odds(params.base_score), dtype=np.float64)
    gain_totals = np.zeros(width, dtype=np.float64)
    trees: list[Tree] = []
    for _ in range(params.n_trees):
        g, h = logistic_grad_hess(margins, y)
        orders = [np.lexsort((h, g, X[:, f])) for f in range(width)]
        trees.append(_grow_tree(X, g, h, orders, params, gain_totals, margins))
    return GBDTModel(params=params, trees=trees, feature_count=width, gain_totals=gain_totals)


def predict_margin(model: GBDTModel, X: np.ndarray):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.feature_count:
        raise ValueError(f"expected {model.feature_count} features, got {X2.shape[1]}")
    margins = np.full(X2.shape[0], log_odds(model.params.base_score), dtype=np.float64)
    for tree in model.trees:
        margins += tree.predict_margin(X2)
    return float(margins[0]) if single else margins


def predict_proba(model: GBDTModel, X: np.ndarray):
    """P(label 1); strictly inside (0, 1)."""
    return sigmoid(predict_margin(model, X))


def feature_importance(model: GBDTModel) -> np.ndarray:
    """Per-feature split gain summed over all trees, divided by the round
    count; unused features score 0."""
    if model.gain_totals.size == 0:
        return np.zeros(model.feature_count)
    return model.gain_totals / model.params.n_trees
