"""Ranking metrics and their transformed versions.

AUC is the Mann-Whitney form (ties get half credit).  Average precision is
the non-trapezoidal mean of precision at each anomaly's rank; score ties are
broken by ascending point index, optionally after a recorded shuffle so the
rule stays deterministic without favoring file order.

``expected_ap`` is the exact expectation of AP under a uniformly random
ranking.  Writing I_k for the indicator that rank k holds an anomaly,

    E[AP] = (1/n_a) * sum_k E[I_k * (1 + sum_{j<k} I_j)] / k

and the pair probabilities P(I_k) = n_a/n, P(I_j & I_k) = n_a(n_a-1)/(n(n-1))
collapse the sum to

    E[AP] = H_n / n + (n_a - 1) * (n - H_n) / (n * (n - 1))

with H_n the n-th harmonic number.  The formula is certified against full
enumeration over anomaly-position sets in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

AUC_CLIP = 1e-6


def _split_labels(labels: np.ndarray) -> np.ndarray:
    mask = np.asarray(labels, dtype=bool)
    if mask.all() or not mask.any():
        raise ValueError("both classes must be present to compute a ranking metric")
    return mask


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """P(random anomaly outscores random nominal), ties counted 1/2.

    ``labels`` is truthy for anomalies.
    """
    scores = np.asarray(scores, dtype=float)
    mask = _split_labels(labels)
    if scores.shape != mask.shape:
        raise ValueError("scores and labels length mismatch")
    n_a = int(mask.sum())
    n_n = mask.size - n_a
    ranks = rankdata(scores)  # midranks for ties
    u = ranks[mask].sum() - n_a * (n_a + 1) / 2.0
    return float(u / (n_a * n_n))


def average_precision(
    scores: np.ndarray,
    labels: np.ndarray,
    tie_break: np.ndarray | None = None,
) -> float:
    """Mean precision at each anomaly's rank (non-trapezoidal).

    ``tie_break`` is a permutation of point indices; tied scores are ordered by
    ascending position in it (identity when omitted).
    """
    scores = np.asarray(scores, dtype=float)
    mask = _split_labels(labels)
    if scores.shape != mask.shape:
        raise ValueError("scores and labels length mismatch")
    n = scores.size
    if tie_break is None:
        key = np.arange(n)
    else:
        key = np.empty(n, dtype=np.int64)
        key[np.asarray(tie_break, dtype=np.int64)] = np.arange(n)
    order = np.lexsort((key, -scores))
    hits = mask[order]
    ranks = np.flatnonzero(hits) + 1
    cum = np.arange(1, ranks.size + 1)
    return float(np.mean(cum / ranks))


def expected_ap(n_anom: int, n_norm: int) -> float:
    """Exact E[AP] over uniformly random rankings of n_anom + n_norm points."""
    if n_anom < 1:
        raise ValueError("expected_ap requires at least one anomaly")
    if n_norm < 0:
        raise ValueError("n_norm must be non-negative")
    n = n_anom + n_norm
    if n == 1 or n_norm == 0:
        return 1.0
    h_n = float(np.sum(1.0 / np.arange(1, n + 1)))
    return h_n / n + (n_anom - 1) * (n - h_n) / (n * (n - 1))


@dataclass(frozen=True)
class MetricRecord:
    """Per-(benchmark, detector) metrics plus the paper-style transforms."""

    auc: float
    ap: float
    expected_ap: float
    logit_auc: float
    log_lift: float
    trivial_log_ratio_auc: float | None = None
    trivial_log_ratio_ap: float | None = None


def _clip_unit(value: float) -> float:
    return min(max(value, AUC_CLIP), 1.0 - AUC_CLIP)


def logit(value: float) -> float:
    """log(p / (1-p)) after clipping p to [1e-6, 1 - 1e-6]."""
    p = _clip_unit(value)
    return math.log(p / (1.0 - p))


def transform(
    auc_value: float,
    ap_value: float,
    n_anom: int,
    n_norm: int,
    trivial_auc: float | None = None,
    trivial_ap: float | None = None,
) -> MetricRecord:
    """Assemble a MetricRecord: logit(AUC), log lift, and trivial-baseline ratios."""
    eap = expected_ap(n_anom, n_norm)
    record = {
        "auc": float(auc_value),
        "ap": float(ap_value),
        "expected_ap": eap,
        "logit_auc": logit(auc_value),
        "log_lift": math.log(ap_value / eap),
    }
    if trivial_auc is not None:
        record["trivial_log_ratio_auc"] = math.log(
            _clip_unit(auc_value) / _clip_unit(trivial_auc)
        )
    if trivial_ap is not None:
        record["trivial_log_ratio_ap"] = math.log(ap_value / trivial_ap)
    return MetricRecord(**record)
