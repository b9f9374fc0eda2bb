"""Nearest-neighbor detectors: LOF and kNN angle-based outlier detection.

LOF is the classic reachability-distance formulation (scikit-learn backed),
k defaulting to 3% of the dataset.  ABOD computes, for each point, the
sample variance of the angles subtended by all pairs among its k nearest
neighbors (k defaulting to 0.5% of the data, at least 3) and negates it, so
low angular variance -- the far-outside-the-cloud signature -- scores high.
With k = n - 1 the kNN variant coincides with the full cubic algorithm.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.neighbors import LocalOutlierFactor, NearestNeighbors


def default_lof_k(n: int) -> int:
    return max(1, math.ceil(0.03 * n))


def default_abod_k(n: int) -> int:
    return max(3, math.ceil(0.005 * n))


def lof_score(data: np.ndarray, k: int | None = None) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    k = default_lof_k(n) if k is None else int(k)
    if not 1 <= k < n:
        raise ValueError(f"LOF needs 1 <= k < n, got k={k}, n={n}")
    lof = LocalOutlierFactor(n_neighbors=k)
    lof.fit(data)
    return -lof.negative_outlier_factor_


def angle_variance(center: np.ndarray, neighbors: np.ndarray) -> float:
    """Sample variance of angles at ``center`` over all neighbor pairs,
    skipping pairs that involve a point coincident with the center.

    Returns nan when fewer than two valid angles remain.
    """
    diffs = neighbors - center
    norms = np.linalg.norm(diffs, axis=1)
    keep = norms > 0
    if keep.sum() < 2:
        return float("nan")
    units = diffs[keep] / norms[keep, None]
    cos = np.clip(units @ units.T, -1.0, 1.0)
    iu = np.triu_indices(units.shape[0], k=1)
    angles = np.arccos(cos[iu])
    if angles.size < 2:
        return float("nan")
    return float(angles.var(ddof=1))


def abod_score(data: np.ndarray, k: int | None = None) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    k = default_abod_k(n) if k is None else int(k)
    if not 2 <= k < n:
        raise ValueError(f"ABOD needs 2 <= k < n, got k={k}, n={n}")
    nn = NearestNeighbors(n_neighbors=k + 1)
    nn.fit(data)
    _, idx = nn.kneighbors(data)
    scores = np.full(n, np.nan)
    for i in range(n):
        neigh = idx[i]
        neigh = neigh[neigh != i][:k]
        scores[i] = -angle_variance(data[i], data[neigh])
    bad = np.isnan(scores)
    if bad.all():
        return np.zeros(n)
    if bad.any():
        # every neighbor pair degenerate: treat as maximally anomalous
        scores[bad] = scores[~bad].max()
    return scores
