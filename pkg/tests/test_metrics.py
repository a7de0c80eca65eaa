"""Ranking metrics against exact brute-force implementations."""

import math

import numpy as np
import pytest

from linkgp import auc, average_precision


def brute_force_auc(scores, labels) -> float:
    """All positive-negative comparisons: wins count 1, ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def brute_force_ap(scores, labels) -> float:
    """Precision at every hit, recomputing each prefix count from scratch."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    n_pos = int(ranked.sum())
    terms = []
    for k in range(1, len(ranked) + 1):
        if ranked[k - 1] == 1:
            seen_pos = int(ranked[:k].sum())
            terms.append(seen_pos / k / n_pos)
    return math.fsum(terms)


def random_instance(rng, max_size=500, tie_free=True):
    t = int(rng.integers(2, max_size + 1))
    while True:
        labels = (rng.random(t) < rng.uniform(0.1, 0.9)).astype(np.int64)
        if 0 < labels.sum() < t:
            break
    if tie_free:
        scores = rng.permutation(t).astype(np.float64)
    else:
        scores = rng.integers(0, max(2, t // 4), size=t).astype(np.float64)
    return scores, labels


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_tied_scores(self):
        assert auc([0.3, 0.3, 0.3, 0.3], [1, 1, 0, 0]) == 0.5

    def test_three_of_four_comparisons_won(self):
        assert auc([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0]) == 0.75

    def test_reversed_ranking(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [0, 0])

    def test_length_mismatch_and_bad_labels(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1])
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 2])
        with pytest.raises(ValueError):
            auc([], [])

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            scores, labels = random_instance(rng, max_size=60, tie_free=False)
            assert auc(scores, labels) == brute_force_auc(scores, labels)

    def test_matches_brute_force_tie_free(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            scores, labels = random_instance(rng, max_size=60)
            assert auc(scores, labels) == brute_force_auc(scores, labels)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_single_positive_ranked_last(self):
        assert average_precision([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1]) == 0.25

    def test_all_positive(self):
        assert average_precision([0.5, 0.4, 0.3], [1, 1, 1]) == 1.0

    def test_no_positive_rejected(self):
        with pytest.raises(ValueError):
            average_precision([0.5, 0.4], [0, 0])

    def test_range(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            scores, labels = random_instance(rng, max_size=40)
            assert 0.0 < average_precision(scores, labels) <= 1.0

    def test_ties_broken_by_input_order(self):
        # stable sort keeps earlier rows first, so tied scores are order-sensitive
        assert average_precision([0.5, 0.5], [1, 0]) == 1.0
        assert average_precision([0.5, 0.5], [0, 1]) == 0.5

    def test_matches_brute_force_tie_free(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            scores, labels = random_instance(rng, max_size=60)
            assert average_precision(scores, labels) == \
                brute_force_ap(scores, labels)
