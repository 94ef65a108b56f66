"""Gain-ratio decision tree that routes an input vector to a network id.

Splits are binary thresholds on single features: value < theta goes left,
value >= theta goes right. Candidate thresholds are midpoints between
consecutive distinct sorted feature values, scored by gain ratio
(information gain over split information, both in bits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TreeError(ValueError):
    pass


@dataclass
class TreeParams:
    max_depth: int = 12
    min_samples_leaf: int = 5


class TreeNode:
    """Internal node (feature, theta, children) or leaf (network id)."""

    __slots__ = ("feature", "theta", "left", "right", "network_id")

    def __init__(self, feature=None, theta=None, left=None, right=None, network_id=None):
        self.feature = feature
        self.theta = theta
        self.left = left
        self.right = right
        self.network_id = network_id

    @property
    def is_leaf(self) -> bool:
        return self.network_id is not None


@dataclass
class TaskClassifier:
    root: TreeNode
    n_features: int
    params: TreeParams

    def node_count(self) -> int:
        def count(node):
            if node.is_leaf:
                return 1
            return 1 + count(node.left) + count(node.right)

        return count(self.root)


def entropy(labels) -> float:
    """Shannon entropy in bits; zero-probability terms contribute nothing."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise TreeError("entropy of an empty label list is undefined")
    _, counts = np.unique(labels, return_counts=True)
    return _entropy_from_counts(counts, labels.size)


def _entropy_from_counts(counts, total) -> float:
    probs = np.asarray(counts, dtype=np.float64) / total
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log2(probs))) if probs.size else 0.0


def gain_ratio(parent_labels, parts) -> float:
    """Information gain of a partition divided by its split information.

    ``parts`` must be a disjoint cover of ``parent_labels`` with at least
    two non-empty members.
    """
    parent = np.asarray(parent_labels)
    if parent.size == 0:
        raise TreeError("gain_ratio needs non-empty parent labels")
    non_empty = [np.asarray(p) for p in parts if len(p) > 0]
    if len(non_empty) < 2:
        raise TreeError("partition must have at least two non-empty parts")
    merged = np.concatenate(non_empty)
    if merged.size != parent.size or not np.array_equal(np.sort(merged), np.sort(parent)):
        raise TreeError("parts are not a disjoint cover of the parent labels")

    n = parent.size
    h_parent = entropy(parent)
    weighted = 0.0
    split_info = 0.0
    for part in non_empty:
        w = part.size / n
        weighted += w * entropy(part)
        split_info += w * np.log2(w)
    split_info = -split_info
    gain = h_parent - weighted
    if gain <= 0.0:
        return 0.0
    return gain / split_info


def best_split(X, Y):
    """Best (feature index, theta) by gain ratio, or None.

    Ties break to the highest gain ratio, then the lowest feature index,
    then the smallest theta. Returns None when no candidate split has
    positive information gain.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(Y)
    if X.shape[0] != Y.shape[0]:
        raise TreeError(f"X and Y length mismatch: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] < 2:
        return None
    return _scan_splits(X, _compact_labels(Y), min_leaf=1)


def _compact_labels(Y):
    # np.unique returns sorted values, so compact ids preserve label order.
    _, compact = np.unique(Y, return_inverse=True)
    return compact


def _scan_splits(X, y, min_leaf):
    """Scan every (feature, midpoint) candidate; return (feature, theta) or None.

    y must be compact integer labels 0..m-1. Entropies are evaluated in the
    same expression shape as :func:`entropy` / :func:`gain_ratio` so that
    scores agree bit-for-bit with a direct per-candidate evaluation.
    """
    n, d = X.shape
    m = int(y.max()) + 1
    if m == 1:
        return None

    h_parent = _entropy_from_counts(np.bincount(y, minlength=m), n)
    onehot = np.eye(m, dtype=np.float64)[y]

    best = None  # (ratio, feature, theta)
    for feature in range(d):
        col = X[:, feature]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        # cumulative class counts after each sample in sorted order
        prefix = np.cumsum(onehot[order], axis=0)
        boundary = np.nonzero(xs[:-1] != xs[1:])[0]  # split after position i
        if min_leaf > 1:
            boundary = boundary[(boundary + 1 >= min_leaf) & (n - boundary - 1 >= min_leaf)]
        if boundary.size == 0:
            continue

        nl = (boundary + 1).astype(np.float64)
        nr = n - nl
        cl = prefix[boundary]
        cr = prefix[-1] - cl

        pl = cl / nl[:, None]
        pr = cr / nr[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            h_left = -np.sum(np.where(pl > 0, pl * np.log2(pl), 0.0), axis=1)
            h_right = -np.sum(np.where(pr > 0, pr * np.log2(pr), 0.0), axis=1)
        wl = nl / n
        wr = nr / n
        gain = h_parent - (wl * h_left + wr * h_right)
        split_info = -(wl * np.log2(wl) + wr * np.log2(wr))
        ratio = np.where(gain > 0.0, gain / split_info, 0.0)

        for j in np.nonzero(gain > 0.0)[0]:
            r = float(ratio[j])
            if best is None or r > best[0]:
                i = boundary[j]
                best = (r, feature, float((xs[i] + xs[i + 1]) / 2.0))

    if best is None:
        return None
    return best[1], best[2]


def fit(X, Y, params: TreeParams | None = None) -> TaskClassifier:
    """Grow a tree greedily until nodes are pure, depth/min-samples limits
    bind, or no remaining split has positive gain. Leaf label is the
    majority id, ties to the smallest id."""
    params = params or TreeParams()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(Y, dtype=np.int64)
    if X.shape[0] == 0:
        raise TreeError("cannot fit a classifier on empty data")
    if X.shape[0] != Y.shape[0]:
        raise TreeError(f"X and Y length mismatch: {X.shape[0]} vs {Y.shape[0]}")

    def build(idx, depth):
        y = Y[idx]
        counts = np.bincount(y)
        if counts.max() == y.size or depth >= params.max_depth or y.size < 2 * params.min_samples_leaf:
            return TreeNode(network_id=int(np.argmax(counts)))
        split = _scan_splits(X[idx], _compact_labels(y), params.min_samples_leaf)
        if split is None:
            return TreeNode(network_id=int(np.argmax(counts)))
        feature, theta = split
        mask = X[idx, feature] < theta
        return TreeNode(
            feature=feature,
            theta=theta,
            left=build(idx[mask], depth + 1),
            right=build(idx[~mask], depth + 1),
        )

    root = build(np.arange(X.shape[0]), 0)
    return TaskClassifier(root=root, n_features=X.shape[1], params=params)


def classify(tc: TaskClassifier, x) -> int:
    """Network id reached by descending thresholds: x[f] < theta goes left."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != tc.n_features:
        raise TreeError(f"input length {x.size} does not match classifier's {tc.n_features}")
    node = tc.root
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.theta else node.right
    return node.network_id


def tree_to_dict(tc: TaskClassifier) -> dict:
    def enc(node):
        if node.is_leaf:
            return {"id": node.network_id}
        return {
            "feature": node.feature,
            "theta": node.theta,
            "left": enc(node.left),
            "right": enc(node.right),
        }

    return {
        "root": enc(tc.root),
        "n_features": tc.n_features,
        "max_depth": tc.params.max_depth,
        "min_samples_leaf": tc.params.min_samples_leaf,
    }


def tree_from_dict(d: dict) -> TaskClassifier:
    def dec(obj):
        if "id" in obj:
            return TreeNode(network_id=int(obj["id"]))
        return TreeNode(
            feature=int(obj["feature"]),
            theta=float(obj["theta"]),
            left=dec(obj["left"]),
            right=dec(obj["right"]),
        )

    return TaskClassifier(
        root=dec(d["root"]),
        n_features=int(d["n_features"]),
        params=TreeParams(int(d["max_depth"]), int(d["min_samples_leaf"])),
    )
