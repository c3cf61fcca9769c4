import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peakshift.metrics import (
    margin_accuracy,
    margin_hits,
    rank_difference_histogram,
    rank_differences,
    rank_heatmap,
    spearman_rho,
    within_share,
)


def pearson(a, b):
    a = np.asarray(a, float) - np.mean(a)
    b = np.asarray(b, float) - np.mean(b)
    return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))


def test_rho_examples():
    assert spearman_rho([1, 2, 3, 4, 5], [1, 2, 3, 4, 5]) == 1.0
    assert spearman_rho([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == -1.0
    assert spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]) == pytest.approx(0.8)


def test_rho_ties_uses_midranks():
    true, est = [1, 2, 3, 4], [1, 2, 2, 3]
    assert spearman_rho(true, est) == pytest.approx(pearson([1, 2, 3, 4], [1, 2.5, 2.5, 4]))


def test_rho_degenerate():
    with pytest.raises(ValueError):
        spearman_rho([1], [1])
    with pytest.raises(ValueError):
        spearman_rho([1, 2], [1, 2, 3])
    assert np.isnan(spearman_rho([1, 2, 3], [2, 2, 2]))


def test_rho_matches_pearson_on_permutations():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        true = np.arange(1, n + 1)
        est = rng.permutation(true)
        assert abs(spearman_rho(true, est) - pearson(true, est)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(1, 21))))
def test_rho_symmetric_and_bounded(perm):
    true = list(range(1, 21))
    r = spearman_rho(true, perm)
    assert -1.0 <= r <= 1.0
    assert r == pytest.approx(spearman_rho(perm, true))
    assert spearman_rho(true, [21 - p for p in perm]) == pytest.approx(-r)


def test_margin_examples():
    true, est = [1, 2, 3, 4], [1, 4, 3, 2]
    curve, acc = margin_accuracy(true, est, 0)
    assert curve.tolist() == [1, 0, 1, 0] and acc == 0.5
    assert within_share(true, est, 2) == 1.0
    # curve follows true rank, not input order
    assert margin_hits([2, 1], [2, 5], 0).tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        margin_hits(true, est, -1)


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(1, 31))))
def test_margin_accuracy_monotone(perm):
    true = list(range(1, 31))
    accs = [within_share(true, perm, m) for m in range(0, 31)]
    assert all(a <= b for a, b in zip(accs, accs[1:]))
    assert accs[-1] == 1.0


def test_histogram_examples():
    hist = rank_difference_histogram([1, 2, 3], [3, 2, 1])
    assert hist == {-2: 1, -1: 0, 0: 1, 1: 0, 2: 1}
    wide = rank_difference_histogram([1, 2, 3, 4], [4, 3, 2, 1], bin_width=2)
    assert wide == {-3: 1, -1: 1, 1: 1, 3: 1}
    assert rank_differences([1, 2], [2, 1]).tolist() == [1, -1]


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(1, 16))), st.integers(1, 6))
def test_histogram_conserves_count(perm, width):
    hist = rank_difference_histogram(list(range(1, 16)), perm, width)
    assert sum(hist.values()) == 15


def test_heatmap():
    grid = rank_heatmap([1, 2, 3], [2, 1, 3])
    assert grid.tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
    assert rank_heatmap([1, 2], [1, 2], size=4).shape == (4, 4)
