"""Trivial baseline: euclidean distance from the data mean.

Used to normalize the non-trivial detectors' performance; a benchmark this
solves well is a benchmark anything solves well.
"""

from __future__ import annotations

import numpy as np


def trivial_score(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.shape[0] < 1:
        raise ValueError("need at least one point")
    return np.linalg.norm(data - data.mean(axis=0), axis=1)
