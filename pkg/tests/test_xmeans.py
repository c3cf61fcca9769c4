import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peakshift.xmeans import Clustering, bic_score, kmeans, kmeans_sse_history, xmeans_cluster

FOUR = [0.0, 0.1, 10.0, 10.1]


def brute_force_two_partition(values):
    """Minimum-SSE split of 1-d values into two non-empty groups."""
    best = None
    idx = range(len(values))
    for r in range(1, len(values)):
        for left in itertools.combinations(idx, r):
            right = [i for i in idx if i not in left]
            sse = 0.0
            for group in (left, right):
                mu = sum(values[i] for i in group) / len(group)
                sse += sum((values[i] - mu) ** 2 for i in group)
            if best is None or sse < best[0]:
                best = (sse, {frozenset(left), frozenset(right)})
    return best


def bic_oracle(points, groups, floor=1e-12):
    """Direct evaluation: per-cluster MLE spherical variance, K(d+1) parameters."""
    r, d = len(points), len(points[0])
    loglik = 0.0
    for g in groups:
        n = len(g)
        mu = [sum(points[i][t] for i in g) / n for t in range(d)]
        sse = sum((points[i][t] - mu[t]) ** 2 for i in g for t in range(d))
        var = max(sse / (d * n), floor)
        loglik += n * math.log(n / r) - 0.5 * n * d * math.log(2 * math.pi * var) - sse / (2 * var)
    return loglik - 0.5 * len(groups) * (d + 1) * math.log(r)


def partition(clustering: Clustering):
    return {frozenset(m) for m in clustering.members()}


def test_kmeans_matches_brute_force_split():
    sse, expected = brute_force_two_partition(FOUR)
    result = kmeans(FOUR, 2, rng_seed=3)
    assert partition(result) == expected == {frozenset({0, 1}), frozenset({2, 3})}
    assert result.sse(FOUR) == pytest.approx(sse)


def test_kmeans_k1_is_global_mean(rng):
    pts = rng.normal(size=(17, 3))
    result = kmeans(pts, 1, rng_seed=0)
    assert result.k == 1
    np.testing.assert_allclose(result.centers[0], pts.mean(0))


def test_kmeans_k_equals_n(rng):
    pts = rng.normal(size=(9, 2))
    result = kmeans(pts, 9, rng_seed=0)
    assert sorted(map(len, result.members())) == [1] * 9
    assert result.sse(pts) == pytest.approx(0.0, abs=1e-20)


def test_kmeans_k_too_large():
    with pytest.raises(ValueError):
        kmeans(FOUR, 5)


def test_empty_clusters_are_repaired():
    pts = np.zeros((6, 2))
    pts[5] = 1.0
    result = kmeans(pts, 3, rng_seed=1)
    assert all(len(m) > 0 for m in result.members())


def test_bic_matches_oracle(rng):
    pts = rng.normal(size=(12, 3))
    labels = np.array([0, 1, 2] * 4)
    groups = [[i for i in range(12) if labels[i] == j] for j in range(3)]
    assert bic_score(pts, labels) == pytest.approx(bic_oracle(pts.tolist(), groups), rel=1e-12)


def test_bic_prefers_split_of_separated_points():
    pts = [[v] for v in FOUR]
    one = bic_oracle(pts, [[0, 1, 2, 3]])
    two = bic_oracle(pts, [[0, 1], [2, 3]])
    assert two > one
    assert bic_score(FOUR, [0, 0, 1, 1]) == pytest.approx(two)
    assert bic_score(FOUR, [0, 0, 0, 0]) == pytest.approx(one)


@pytest.mark.parametrize("split", [[0, 0, 1, 1, 1], [0, 1, 1, 1, 1], [1, 0, 1, 0, 1]])
def test_bic_identical_points_never_split(split):
    pts = np.full((5, 2), 3.0)
    assert bic_score(pts, [0] * 5) >= bic_score(pts, split)


def test_bic_single_point_is_finite():
    assert math.isfinite(bic_score([[1.0, 2.0]], [0]))


def test_xmeans_examples():
    assert partition(xmeans_cluster(FOUR, rng_seed=0)) == {frozenset({0, 1}), frozenset({2, 3})}
    assert xmeans_cluster([[4.2]], rng_seed=0).k == 1
    assert xmeans_cluster(np.ones((20, 3)), rng_seed=0).k == 1


def test_xmeans_finds_separated_blobs(rng):
    centers = np.array([[0, 0], [50, 0], [0, 50]])
    pts = np.concatenate([c + rng.normal(size=(30, 2)) for c in centers])
    result = xmeans_cluster(pts, rng_seed=4)
    # every blob stays intact (a blob may split, but no cluster mixes blobs)
    blob = np.repeat([0, 1, 2], 30)
    for m in result.members():
        assert len(set(blob[m])) == 1


def test_xmeans_respects_cap(rng):
    pts = rng.normal(size=(40, 2)) * 100
    assert xmeans_cluster(pts, k_max=3, rng_seed=0).k <= 3


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        xmeans_cluster([[np.nan]])


point_sets = st.integers(1, 25).flatmap(
    lambda n: st.lists(
        st.lists(st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 3)), min_size=2, max_size=2),
        min_size=n,
        max_size=n,
    )
)


@settings(max_examples=100, deadline=None)
@given(point_sets, st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_xmeans_properties(pts, seed, k_max):
    pts = np.array(pts)
    a = xmeans_cluster(pts, k_max, seed)
    b = xmeans_cluster(pts, k_max, seed)
    assert np.array_equal(a.labels, b.labels)
    assert 1 <= a.k <= min(k_max, len(pts))
    members = a.members()
    assert sorted(i for m in members for i in m) == list(range(len(pts)))
    for j, m in enumerate(members):
        assert m
        np.testing.assert_allclose(a.centers[j], pts[m].mean(0), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(point_sets, st.integers(0, 2**32 - 1), st.randoms(use_true_random=False))
def test_xmeans_ignores_input_order(pts, seed, shuffler):
    pts = np.array(pts)
    perm = list(range(len(pts)))
    shuffler.shuffle(perm)
    a = xmeans_cluster(pts, None, seed)
    b = xmeans_cluster(pts[perm], None, seed)
    back = {frozenset(perm[i] for i in m) for m in b.members()}
    assert partition(a) == back


@settings(max_examples=100, deadline=None)
@given(point_sets.filter(lambda p: len(p) >= 3), st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_lloyd_sse_never_increases(pts, seed, k):
    history = kmeans_sse_history(np.array(pts), k, seed)
    assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(history, history[1:]))
