"""Isolation forest scoring.

Backed by scikit-learn's IsolationForest, which implements the standard
construction exactly: uniform feature choice, uniform split in the observed
range, tree height capped at ceil(log2(subsample)), and the average-path-
length correction c(psi), yielding scores 2^(-E[h(x)] / c(psi)) in (0, 1).
"""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import IsolationForest


def iforest_score(
    data: np.ndarray, trees: int = 100, subsample: int = 2048, seed: int = 0
) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n < 2:
        raise ValueError("isolation forest needs at least two points")
    forest = IsolationForest(
        n_estimators=trees,
        max_samples=min(subsample, n),  # whole dataset when the benchmark is small
        random_state=seed % (2**32),
        n_jobs=1,
    )
    forest.fit(data)
    # sklearn's score_samples is -2^(-E[h]/c); negate back to the paper form
    return -forest.score_samples(data)
