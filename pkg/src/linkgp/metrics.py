"""Ranking metrics for scored candidate links.

AUC is the Mann-Whitney statistic P(score_pos > score_neg) + 0.5 P(tie),
computed exactly with midranks. Average precision sums precision times
recall increments over descending-score prefix thresholds; the sort is
stable, so tie-heavy inputs depend on input order (documented, matches
the prefix-threshold definition).
"""

from __future__ import annotations

import math

import numpy as np


def _validate(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have equal length")
    if scores.shape[0] == 0:
        raise ValueError("need at least one scored pair")
    uniq = np.unique(labels)
    if not np.isin(uniq, [0, 1]).all():
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def _midranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < sorted_scores.shape[0]:
        j = i
        while j + 1 < sorted_scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # ranks are 1-based; tied entries share the average rank
        ranks[order[i: j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties half."""
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = _midranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def average_precision(scores, labels) -> float:
    """Area under the precision-recall curve over prefix thresholds."""
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("at least one positive is required")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    terms = []
    seen_pos = 0
    for k, hit in enumerate(hits, start=1):
        if hit:
            seen_pos += 1
            # recall increments by 1/n_pos exactly at each positive
            terms.append(seen_pos / k / n_pos)
    return math.fsum(terms)
