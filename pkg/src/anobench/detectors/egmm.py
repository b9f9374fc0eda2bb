"""Ensemble Gaussian mixture density scoring.

Data is PCA-reduced to retain 95% of the variance.  For each component count
k in the grid, 15 mixtures are fit by EM on bootstrap replicates with random
initialization; each k is scored by its replicates' mean out-of-bag
log-likelihood, and component counts falling below the best by more than 15%
of its magnitude are discarded (the paper's 0.85-ratio rule, extended to
negative log-likelihoods).  The score is the mean negative log density over
every retained model.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.decomposition import PCA
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

from ..seeding import derive_seed

PCA_VARIANCE = 0.95


def retained_component_counts(
    avg_loglik: dict[int, float], keep_threshold: float = 0.85
) -> list[int]:
    """Component counts whose mean OOB log-likelihood is within the keep rule.

    For positive log-likelihoods this is the plain ratio rule
    avg >= keep_threshold * best; stated additively as
    avg >= best - (1 - keep_threshold) * |best| it extends to negative values.
    """
    best = max(avg_loglik.values())
    cutoff = best - (1.0 - keep_threshold) * abs(best)
    return sorted(k for k, v in avg_loglik.items() if v >= cutoff)


def egmm_score(
    data: np.ndarray,
    k_grid: tuple[int, ...] = (1, 2, 3, 4, 5, 6),
    replicates: int = 15,
    keep_threshold: float = 0.85,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-7,
    reg_covar: float = 1e-6,
) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n < 10:
        raise ValueError("EGMM needs at least 10 points")

    n_comp = PCA_VARIANCE if min(data.shape) > 1 else 1
    reduced = PCA(n_components=n_comp, svd_solver="full").fit_transform(data)

    rng = np.random.default_rng(derive_seed(seed, "egmm"))
    models: dict[int, list[GaussianMixture]] = {}
    oob_logliks: dict[int, list[float]] = {}
    for k in k_grid:
        if k > n:
            continue
        models[k] = []
        oob_logliks[k] = []
        for rep in range(replicates):
            boot = rng.integers(0, n, size=n)
            oob_mask = np.ones(n, dtype=bool)
            oob_mask[boot] = False
            if not oob_mask.any():
                continue
            gmm = GaussianMixture(
                n_components=k,
                covariance_type="full",
                reg_covar=reg_covar,
                max_iter=max_iter,
                tol=tol,
                init_params="random_from_data",
                n_init=1,
                random_state=derive_seed(seed, "egmm", k, rep) % (2**32),
            )
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    gmm.fit(reduced[boot])
                oob = float(gmm.score(reduced[oob_mask]))
            except (np.linalg.LinAlgError, ValueError):
                continue  # singular replicate: drop it
            if not np.isfinite(oob):
                continue
            models[k].append(gmm)
            oob_logliks[k].append(oob)

    avg = {k: float(np.mean(v)) for k, v in oob_logliks.items() if v}
    if not avg:
        raise RuntimeError("every EGMM replicate failed to fit")
    retained = retained_component_counts(avg, keep_threshold)

    log_dens = np.zeros(n)
    count = 0
    for k in retained:
        for gmm in models[k]:
            log_dens += gmm.score_samples(reduced)
            count += 1
    return -log_dens / count
