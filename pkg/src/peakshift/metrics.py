"""Agreement between an estimated and a true ranking."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def _pair(true, estimated) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(true, dtype=float)
    e = np.asarray(estimated, dtype=float)
    if t.shape != e.shape or t.ndim != 1:
        raise ValueError("rankings must be 1-d and of equal length")
    return t, e


def spearman_rho(true, estimated) -> float:
    """Spearman's rank correlation.

    Inputs are re-ranked first, so any strictly ordered scores work. With
    distinct ranks this is 1 - 6 sum(d^2) / (n (n^2 - 1)); with ties it is
    the Pearson correlation of mid-ranks.
    """
    t, e = _pair(true, estimated)
    n = len(t)
    if n < 2:
        raise ValueError("need at least two rank pairs")
    rt, re = rankdata(t), rankdata(e)
    if len(np.unique(t)) == n and len(np.unique(e)) == n:
        d2 = float(((rt - re) ** 2).sum())
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    rt -= rt.mean()
    re -= re.mean()
    denom = np.sqrt((rt * rt).sum() * (re * re).sum())
    if denom == 0.0:
        return float("nan")
    return float((rt * re).sum() / denom)


def margin_hits(true, estimated, margin: int) -> np.ndarray:
    """Hit indicator per university ordered by true rank: |est - true| <= margin."""
    t, e = _pair(true, estimated)
    if margin < 0:
        raise ValueError("margin must be non-negative")
    order = np.argsort(t, kind="stable")
    return (np.abs(e - t) <= margin)[order].astype(float)


def margin_accuracy(true, estimated, margin: int) -> tuple[np.ndarray, float]:
    """Accuracy curve indexed by true rank and its mean."""
    hits = margin_hits(true, estimated, margin)
    return hits, float(hits.mean())


def within_share(true, estimated, margin: int) -> float:
    return margin_accuracy(true, estimated, margin)[1]


def rank_differences(true, estimated) -> np.ndarray:
    t, e = _pair(true, estimated)
    return (e - t).astype(np.int64)


def rank_difference_histogram(true, estimated, bin_width: int = 1) -> dict[int, int]:
    """Counts of estimated - true, keyed by each bin's lower edge.

    Bins of ``bin_width`` start at -(n - 1) and run past n - 1, so every
    possible difference of two rankings of n items falls into one.
    """
    if bin_width < 1:
        raise ValueError("bin_width must be positive")
    diff = rank_differences(true, estimated)
    n = len(diff)
    lo = -(n - 1)
    nbins = (2 * (n - 1)) // bin_width + 1
    counts = np.bincount((diff - lo) // bin_width, minlength=nbins)
    return {lo + b * bin_width: int(c) for b, c in enumerate(counts)}


def rank_heatmap(true, estimated, size: int | None = None) -> np.ndarray:
    """Count matrix with rows = true rank, columns = estimated rank (1-based)."""
    t, e = _pair(true, estimated)
    size = int(max(t.max(), e.max())) if size is None else size
    grid = np.zeros((size, size), dtype=np.int64)
    np.add.at(grid, (t.astype(int) - 1, e.astype(int) - 1), 1)
    return grid
