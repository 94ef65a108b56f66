"""K-means (Lloyd iterations, seeded k-means++ starts) over input vectors.

Used to split the set of samples the general network got wrong into k
groups, one specialist network per group. Restarts keep the lowest
within-cluster squared-error objective J.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) cluster index per input point
    objective: float  # J = sum of squared distances to assigned centroids


def _squared_distances(points, centroids):
    # (n, k) squared Euclidean distances
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _objective(points, centroids, assignments) -> float:
    diff = points - centroids[assignments]
    return float(np.einsum("nd,nd->", diff, diff))


def _kmeanspp_init(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centroids[c] = points[rng.choice(n, p=probs)]
        else:
            centroids[c] = points[rng.integers(n)]
        d2 = np.minimum(d2, np.sum((points - centroids[c]) ** 2, axis=1))
    return centroids


def _repair_empty(points, centroids, assignments, k):
    """Hand the farthest point from its centroid to each empty cluster."""
    counts = np.bincount(assignments, minlength=k)
    for c in range(k):
        if counts[c] > 0:
            continue
        dist = np.sum((points - centroids[assignments]) ** 2, axis=1)
        dist[counts[assignments] <= 1] = -1.0  # don't empty another cluster
        donor = int(np.argmax(dist))
        counts[assignments[donor]] -= 1
        assignments[donor] = c
        counts[c] = 1
        centroids[c] = points[donor]
    return assignments


def _lloyd(points, centroids, k, max_iter):
    assignments = None
    prev_obj = np.inf
    for _ in range(max_iter):
        d2 = _squared_distances(points, centroids)
        new_assign = np.argmin(d2, axis=1)
        new_assign = _repair_empty(points, centroids, new_assign, k)
        obj = _objective(points, centroids, new_assign)
        if obj > prev_obj + 1e-9 * max(1.0, prev_obj):
            raise AssertionError("k-means objective increased across an iteration")
        prev_obj = obj
        if assignments is not None and np.array_equal(new_assign, assignments):
            break
        assignments = new_assign
        for c in range(k):
            centroids[c] = points[assignments == c].mean(axis=0)
    return centroids, assignments, _objective(points, centroids, assignments)


def kmeans(points, k: int, max_iter: int = 100, seed: int = 0, restarts: int = 5) -> ClusterModel:
    """Cluster points into exactly k non-empty groups.

    Deterministic for a given seed; ``restarts`` independent k-means++
    starts are run and the result with the lowest J wins.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ClusteringError("points must be a list of equal-length vectors")
    n = pts.shape[0]
    if k < 1:
        raise ClusteringError(f"k must be at least 1, got {k}")
    if k > n:
        raise ClusteringError(f"k={k} exceeds the number of points ({n})")

    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centroids = _kmeanspp_init(pts.copy(), k, rng)
        centroids, assignments, obj = _lloyd(pts, centroids, k, max_iter)
        if best is None or obj < best.objective:
            best = ClusterModel(k=k, centroids=centroids.copy(), assignments=assignments.copy(), objective=obj)
    return best


def assign(model: ClusterModel, x) -> int:
    """Index of the nearest centroid; ties break to the lowest index."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != model.centroids.shape[1]:
        raise ClusteringError(
            f"input length {x.size} does not match centroid length {model.centroids.shape[1]}"
        )
    d2 = np.sum((model.centroids - x) ** 2, axis=1)
    return int(np.argmin(d2))
