"""k-means and X-means (BIC-driven binary splitting) on small point sets.

Points are processed in a canonical lexicographic order so that the result
depends only on the multiset of points and the seed, never on input order.
Randomness comes from a numpy Generator in the caller; the compiled kernels
only consume uniforms drawn from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_ITER = 100
VARIANCE_FLOOR = 1e-12
# a two-point cluster split into singletons always wins under the floor
MIN_SPLIT_SIZE = 3


@dataclass(frozen=True, eq=False)
class Clustering:
    labels: np.ndarray
    centers: np.ndarray

    @property
    def k(self) -> int:
        return len(self.centers)

    def members(self, ids=None) -> list[list]:
        """Cluster memberships as lists of ids (or point indices)."""
        groups = [np.flatnonzero(self.labels == j) for j in range(self.k)]
        if ids is None:
            return [g.tolist() for g in groups]
        return [[ids[i] for i in g] for g in groups]

    def sse(self, points) -> float:
        points = _as_points(points)
        return float(((points - self.centers[self.labels]) ** 2).sum())


@njit(cache=True)
def _sq_dist(x, centers):
    n, d = x.shape
    k = centers.shape[0]
    out = np.empty((n, k))
    for i in range(n):
        for j in range(k):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - centers[j, t]
                acc += diff * diff
            out[i, j] = acc
    return out


@njit(cache=True)
def _means(x, labels, k):
    n, d = x.shape
    sums = np.zeros((k, d))
    counts = np.zeros(k)
    for i in range(n):
        counts[labels[i]] += 1.0
        for t in range(d):
            sums[labels[i], t] += x[i, t]
    for j in range(k):
        if counts[j] > 0:
            for t in range(d):
                sums[j, t] /= counts[j]
    return sums


@njit(cache=True)
def _sse(x, labels, centers):
    acc = 0.0
    for i in range(x.shape[0]):
        for t in range(x.shape[1]):
            diff = x[i, t] - centers[labels[i], t]
            acc += diff * diff
    return acc


@njit(cache=True)
def _plusplus(x, k, uniforms):
    n, d = x.shape
    centers = np.empty((k, d))
    first = min(int(uniforms[0] * n), n - 1)
    centers[0] = x[first]
    d2 = np.empty(n)
    for i in range(n):
        acc = 0.0
        for t in range(d):
            diff = x[i, t] - x[first, t]
            acc += diff * diff
        d2[i] = acc
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = min(int(uniforms[c] * n), n - 1)
        else:
            target = uniforms[c] * total
            acc = 0.0
            idx = n - 1
            for i in range(n):
                acc += d2[i]
                if acc > target:
                    idx = i
                    break
        centers[c] = x[idx]
        for i in range(n):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - x[idx, t]
                acc += diff * diff
            if acc < d2[i]:
                d2[i] = acc
    return centers


@njit(cache=True)
def _assign(x, centers):
    d2 = _sq_dist(x, centers)
    n, k = d2.shape
    labels = np.empty(n, dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    own = np.empty(n)
    for i in range(n):
        best = 0
        for j in range(1, k):
            if d2[i, j] < d2[i, best]:
                best = j
        labels[i] = best
        own[i] = d2[i, best]
        counts[best] += 1
    # refill empty clusters with the farthest point of a multi-member cluster
    for j in range(k):
        if counts[j] == 0:
            far = -1
            for i in range(n):
                if counts[labels[i]] > 1 and (far < 0 or own[i] > own[far]):
                    far = i
            counts[labels[far]] -= 1
            labels[far] = j
            own[far] = 0.0
            counts[j] = 1
    return labels


@njit(cache=True)
def _lloyd(x, centers, max_iter, history):
    """Returns labels, centres and the number of SSE values written to history."""
    k = centers.shape[0]
    labels = _assign(x, centers)
    centers = _means(x, labels, k)
    written = 0
    if history.shape[0] > 0:
        history[0] = _sse(x, labels, centers)
        written = 1
    for _ in range(max_iter - 1):
        new = _assign(x, centers)
        if np.array_equal(new, labels):
            break
        labels = new
        centers = _means(x, labels, k)
        if written < history.shape[0]:
            history[written] = _sse(x, labels, centers)
            written += 1
    return labels, centers, written


@njit(cache=True)
def _bic(x, labels, k, floor):
    r, d = x.shape
    centers = _means(x, labels, k)
    sizes = np.zeros(k)
    sse = np.zeros(k)
    for i in range(r):
        j = labels[i]
        sizes[j] += 1.0
        for t in range(d):
            diff = x[i, t] - centers[j, t]
            sse[j] += diff * diff
    loglik = 0.0
    for j in range(k):
        if sizes[j] == 0:
            continue
        var = max(sse[j] / (d * sizes[j]), floor)
        loglik += (
            sizes[j] * math.log(sizes[j] / r)
            - 0.5 * sizes[j] * d * math.log(2.0 * math.pi * var)
            - sse[j] / (2.0 * var)
        )
    return loglik - 0.5 * k * (d + 1) * math.log(r)


@njit(cache=True)
def _kmeans(x, k, uniforms, max_iter):
    n = x.shape[0]
    if k == 1:
        labels = np.zeros(n, dtype=np.int64)
        return labels, _means(x, labels, 1)
    labels, centers, _ = _lloyd(x, _plusplus(x, k, uniforms), max_iter, np.empty(0))
    return labels, centers


@njit(cache=True)
def _split_round(x, labels, centers, uniforms, budget, max_iter, floor, min_size):
    """Try a 2-means split of every cluster; keep those that raise local BIC."""
    k, d = centers.shape
    out = np.empty((k + max(budget, 0), d))
    used = 0
    for j in range(k):
        size = 0
        for i in range(labels.shape[0]):
            if labels[i] == j:
                size += 1
        split = False
        if budget > 0 and size >= min_size:
            pts = np.empty((size, d))
            p = 0
            for i in range(labels.shape[0]):
                if labels[i] == j:
                    pts[p] = x[i]
                    p += 1
            child_labels, child_centers = _kmeans(pts, 2, uniforms[2 * j : 2 * j + 2], max_iter)
            parent = _bic(pts, np.zeros(size, dtype=np.int64), 1, floor)
            if _bic(pts, child_labels, 2, floor) > parent:
                out[used] = child_centers[0]
                out[used + 1] = child_centers[1]
                used += 2
                budget -= 1
                split = True
        if not split:
            out[used] = centers[j]
            used += 1
    return out[:used]


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("points must be a (n, d) array with d >= 1")
    if not np.isfinite(x).all():
        raise ValueError("points contain non-finite values")
    return np.ascontiguousarray(x)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _canonical_order(x: np.ndarray) -> np.ndarray:
    # first column is the primary key
    return np.lexsort(x.T[::-1])


def _from_canonical(order, labels, centers) -> Clustering:
    out = np.empty_like(labels)
    out[order] = labels
    return Clustering(out, centers)


def kmeans(points, k: int, rng_seed=None, max_iter: int = MAX_ITER) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding.

    Empty clusters are refilled with the point farthest from its centroid.
    """
    x = _as_points(points)
    if not 1 <= k <= len(x):
        raise ValueError(f"k={k} must lie in [1, {len(x)}]")
    order = _canonical_order(x)
    labels, centers = _kmeans(x[order], k, _rng(rng_seed).random(k), max_iter)
    return _from_canonical(order, labels, centers)


def kmeans_sse_history(points, k: int, rng_seed=None, max_iter: int = MAX_ITER) -> list[float]:
    """SSE after every Lloyd update, for monotonicity checks."""
    x = _as_points(points)
    x = x[_canonical_order(x)]
    history = np.empty(max_iter)
    start = _plusplus(x, k, _rng(rng_seed).random(k))
    _, _, written = _lloyd(x, start, max_iter, history)
    return history[:written].tolist()


def bic_score(points, clustering: Clustering | np.ndarray, variance_floor: float = VARIANCE_FLOOR) -> float:
    """Spherical-Gaussian BIC of a hard clustering; larger is better.

    Each cluster gets its own MLE variance SSE_j / (d R_j), floored at
    ``variance_floor``; the penalty counts K (d + 1) parameters.
    """
    x = _as_points(points)
    labels = clustering.labels if isinstance(clustering, Clustering) else np.asarray(clustering)
    _, labels = np.unique(labels, return_inverse=True)
    labels = labels.ravel().astype(np.int64)
    return float(_bic(x, labels, int(labels.max()) + 1, variance_floor))


def xmeans_cluster(
    points,
    k_max: int | None = None,
    rng_seed=None,
    max_iter: int = MAX_ITER,
    variance_floor: float = VARIANCE_FLOOR,
) -> Clustering:
    """Grow a clustering from k=1 by accepting BIC-improving 2-means splits.

    Each round refines all centres with Lloyd iterations, then tries to
    split every cluster of at least three points in two; a split is kept
    when the local BIC of the children beats that of the parent. Stops when
    no split is accepted or the cap ``min(k_max, n)`` is reached.
    """
    x = _as_points(points)
    n = len(x)
    cap = n if k_max is None else max(1, min(k_max, n))
    rng = _rng(rng_seed)
    order = _canonical_order(x)
    x = x[order]
    no_history = np.empty(0)

    centers = x.mean(0, keepdims=True)
    labels = np.zeros(n, dtype=np.int64)
    while True:
        if len(centers) > 1:
            labels, centers, _ = _lloyd(x, centers, max_iter, no_history)
        budget = cap - len(centers)
        if budget <= 0:
            break
        uniforms = rng.random(2 * len(centers))
        grown = _split_round(x, labels, centers, uniforms, budget, max_iter, variance_floor, MIN_SPLIT_SIZE)
        if len(grown) == len(centers):
            break
        centers = grown
    return _from_canonical(order, labels, centers)
