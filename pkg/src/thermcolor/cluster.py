"""Seeded Lloyd k-means with k-means++ initialisation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arraycore import InvalidInputError


@dataclass
class ClusterResult:
    centroids: np.ndarray  # (k, C)
    assignments: np.ndarray  # (N,)
    inertia: float
    n_iter: int = 0
    inertia_history: list[float] = field(default_factory=list)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return (diff * diff).sum(axis=2)


def _assign(points, centroids):
    d = _sq_dists(points, centroids)
    labels = d.argmin(axis=1)
    return labels, d[np.arange(len(points)), labels]


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    idx = [int(rng.integers(n))]
    closest = ((points - points[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining mass sits on chosen centres; take unused rows in order
            unused = [i for i in range(n) if i not in idx]
            nxt = unused[0]
        else:
            nxt = int(rng.choice(n, p=closest / total))
        idx.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[idx].copy()


def _repair_empty(points, centroids, labels, mind):
    """Move each empty centroid onto the point currently farthest from its centroid."""
    k = len(centroids)
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if not len(empty):
        return centroids, False
    mind = mind.copy()
    for j in empty:
        # donors must keep at least one point
        donor = counts[labels] > 1
        far = int(np.where(donor, mind, -1.0).argmax())
        counts[labels[far]] -= 1
        counts[j] = 1
        centroids[j] = points[far]
        labels[far] = j
        mind[far] = 0.0
    return centroids, True


def kmeans(points, k: int, seed: int = 0, max_iters: int = 100, tol: float = 1e-4) -> ClusterResult:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError(f"points must be (N,C), got {x.shape}")
    n = len(x)
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= N, got k={k}, N={n}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("points contain non-finite values")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plusplus(x, k, rng)
    labels, mind = _assign(x, centroids)
    history = [float(mind.sum())]
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        centroids, repaired = _repair_empty(x, centroids, labels, mind)
        new = np.stack([x[labels == j].mean(axis=0) for j in range(k)])
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        labels, mind = _assign(x, centroids)
        history.append(float(mind.sum()))
        if shift < tol and not repaired:
            break
    return ClusterResult(centroids, labels, float(mind.sum()), n_iter, history)
