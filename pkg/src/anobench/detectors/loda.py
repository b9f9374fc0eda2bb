"""LODA: many sparse random projections, one histogram density each.

Each projection draws ceil(sqrt(d)) coordinates with Gaussian weights; 3d
projections in total.  Per-projection densities use equal-width histograms
with ceil(sqrt(n)) bins and a probability-mass floor of 1/(n * bins), which
bounds scores for empty bins and out-of-range queries.  The score is the
mean negative log density across projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class _Histogram:
    lo: float
    width: float
    mass: np.ndarray  # per-bin probability mass
    floor: float

    def log_density(self, z: np.ndarray) -> np.ndarray:
        bins = self.mass.shape[0]
        hi = self.lo + self.width * bins
        in_range = (z >= self.lo) & (z <= hi)
        idx = np.clip(
            np.floor((z - self.lo) / self.width).astype(np.int64), 0, bins - 1
        )
        m = np.where(in_range, self.mass[idx], 0.0)
        m = np.maximum(m, self.floor)
        return np.log(m / self.width)


@dataclass
class LodaModel:
    coords: list[np.ndarray]
    weights: list[np.ndarray]
    histograms: list[_Histogram]

    def score(self, data: np.ndarray) -> np.ndarray:
        data = np.asarray(data, dtype=float)
        total = np.zeros(data.shape[0])
        for coords, w, hist in zip(self.coords, self.weights, self.histograms):
            z = data[:, coords] @ w
            total -= hist.log_density(z)
        return total / len(self.histograms)


def fit_loda(
    data: np.ndarray, projections: int | None = None, seed: int = 0
) -> LodaModel:
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if n < 2:
        raise ValueError("LODA needs at least two points")
    n_proj = 3 * d if projections is None else int(projections)
    n_nonzero = math.ceil(math.sqrt(d))
    n_bins = math.ceil(math.sqrt(n))
    floor = 1.0 / (n * n_bins)
    rng = np.random.default_rng(seed)

    coords_list, weights_list, hists = [], [], []
    for _ in range(n_proj):
        coords = rng.choice(d, size=n_nonzero, replace=False)
        w = rng.standard_normal(n_nonzero)
        z = data[:, coords] @ w
        lo, hi = float(z.min()), float(z.max())
        if hi <= lo:  # constant projection: all mass in one unit-width bin
            hist = _Histogram(lo=lo - 0.5, width=1.0, mass=np.ones(1), floor=floor)
        else:
            width = (hi - lo) / n_bins
            idx = np.minimum(((z - lo) / width).astype(np.int64), n_bins - 1)
            counts = np.bincount(idx, minlength=n_bins).astype(float)
            hist = _Histogram(lo=lo, width=width, mass=counts / n, floor=floor)
        coords_list.append(coords)
        weights_list.append(w)
        hists.append(hist)
    return LodaModel(coords_list, weights_list, hists)


def loda_score(
    data: np.ndarray, projections: int | None = None, seed: int = 0
) -> np.ndarray:
    model = fit_loda(data, projections, seed)
    return model.score(data)
