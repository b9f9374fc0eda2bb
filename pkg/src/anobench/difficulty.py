"""Point-difficulty oracle: Gaussian-RBF kernel logistic regression fit by
iteratively reweighted least squares.

A point's difficulty is the oracle's posterior probability that it belongs to
the class opposite its ground truth, so difficulty(point, label) and
difficulty(point, other label) sum to one exactly.

Hyperparameters (kernel length scale as a multiple of the median pairwise
distance, ridge penalty on the RKHS norm) are chosen by 5-fold
cross-validated log loss.  On mothersets above ``LARGE_N`` the kernel centers
are a uniform 1,000-point subsample; cross-validation additionally runs on a
row subsample so selection stays tractable, while the final fit uses every
row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .ingest import Motherset
from .seeding import spawn_rng

logger = logging.getLogger(__name__)

PROB_CLIP = 1e-6
BANDWIDTH_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1)
LARGE_N = 5_000
CENTER_CAP = 1_000
CV_ROW_CAP = 2_500
CV_CENTER_CAP = 800
MAX_ITER = 100
CV_MAX_ITER = 40
REL_TOL = 1e-8
MAX_HALVINGS = 20


@dataclass
class DifficultyOracle:
    """Fitted KLR posterior. ``weights`` holds the dual coefficients with the
    intercept appended."""

    centers: np.ndarray
    weights: np.ndarray
    bandwidth: float
    regularization: float
    converged: bool = True
    cv_losses: dict = field(default_factory=dict)
    selected: tuple[float, float] | None = None
    seed: int | None = None

    def decision_function(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.centers.shape[1]:
            raise ValueError(
                f"point dimension {points.shape[1]} does not match oracle "
                f"dimension {self.centers.shape[1]}"
            )
        k = _rbf_kernel(points, self.centers, self.bandwidth)
        return k @ self.weights[:-1] + self.weights[-1]

    def predict_proba(self, points: np.ndarray) -> np.ndarray:
        """P(candidate-anomaly | point), clipped away from 0 and 1."""
        p = _sigmoid(self.decision_function(points))
        return np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)


def _sigmoid(f: np.ndarray) -> np.ndarray:
    out = np.empty_like(f)
    pos = f >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-f[pos]))
    e = np.exp(f[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _rbf_kernel(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


def median_pairwise_distance(
    features: np.ndarray, rng: np.random.Generator, cap: int = 1_000
) -> float:
    n = features.shape[0]
    if n > cap:
        idx = rng.choice(n, size=cap, replace=False)
        features = features[idx]
    dists = pdist(features)
    med = float(np.median(dists))
    if med <= 0:
        positive = dists[dists > 0]
        med = float(np.median(positive)) if positive.size else 1.0
    return med


def _penalized_objective(
    kernel: np.ndarray, k_cc: np.ndarray, y: np.ndarray, beta: np.ndarray, b: float, lam: float
) -> tuple[float, np.ndarray]:
    f = kernel @ beta + b
    # stable -loglik: sum log(1 + exp(-y_pm * f)) with y_pm in {-1, +1}
    margin = np.where(y > 0.5, f, -f)
    nll = float(np.logaddexp(0.0, -margin).sum())
    penalty = 0.5 * lam * float(beta @ (k_cc @ beta))
    return nll + penalty, f


def _fit_irls(
    kernel: np.ndarray,
    k_cc: np.ndarray,
    y: np.ndarray,
    lam: float,
    max_iter: int,
    init: tuple[np.ndarray, float] | None = None,
    trace: list[float] | None = None,
) -> tuple[np.ndarray, float, bool]:
    """Minimize penalized logistic loss; returns (beta, intercept, converged).

    ``trace``, when given, receives the objective after each accepted step.
    """
    m = kernel.shape[1]
    if init is None:
        beta = np.zeros(m)
        b = float(np.log((y.mean() + PROB_CLIP) / (1.0 - y.mean() + PROB_CLIP)))
    else:
        beta, b = init[0].copy(), float(init[1])
    jitter = 1e-10 * (np.trace(k_cc) / m + 1.0)
    obj, f = _penalized_objective(kernel, k_cc, y, beta, b, lam)
    if trace is not None:
        trace.append(obj)
    converged = False
    for _ in range(max_iter):
        p = _sigmoid(f)
        w = np.maximum(p * (1.0 - p), 1e-10)
        z = f + (y - p) / w
        kw = kernel * w[:, None]
        a = np.empty((m + 1, m + 1))
        a[:m, :m] = kw.T @ kernel + lam * k_cc
        a[:m, :m].flat[:: m + 1] += jitter
        a[:m, m] = kw.sum(axis=0)
        a[m, :m] = a[:m, m]
        a[m, m] = w.sum()
        rhs = np.empty(m + 1)
        wz = w * z
        rhs[:m] = kernel.T @ wz
        rhs[m] = wz.sum()
        try:
            sol = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            a[:m, :m].flat[:: m + 1] += 1e-6
            sol = np.linalg.solve(a, rhs)
        step_beta = sol[:m] - beta
        step_b = float(sol[m]) - b
        # step halving keeps the penalized objective monotone
        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand_beta = beta + scale * step_beta
            cand_b = b + scale * step_b
            cand_obj, cand_f = _penalized_objective(
                kernel, k_cc, y, cand_beta, cand_b, lam
            )
            if cand_obj <= obj + 1e-12:
                break
            scale *= 0.5
        else:
            return beta, b, False
        beta, b, f = cand_beta, cand_b, cand_f
        if trace is not None:
            trace.append(cand_obj)
        if abs(obj - cand_obj) <= REL_TOL * (abs(obj) + 1.0):
            obj = cand_obj
            converged = True
            break
        obj = cand_obj
    return beta, b, converged


def _log_loss(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def fit_difficulty_oracle(mset: Motherset, seed: int = 0) -> DifficultyOracle:
    """Select (bandwidth, regularization) by 5-fold CV log loss, then fit on
    the full motherset."""
    x = mset.features
    y = mset.is_anomaly.astype(float)
    n = x.shape[0]
    rng = spawn_rng(seed, "difficulty", mset.name)

    med = median_pairwise_distance(x, rng)
    bandwidths = tuple(med * f for f in BANDWIDTH_FACTORS)

    # CV rows: subsample for tractability on large mothersets
    if n > CV_ROW_CAP:
        cv_idx = np.sort(rng.choice(n, size=CV_ROW_CAP, replace=False))
    else:
        cv_idx = np.arange(n)
    x_cv, y_cv = x[cv_idx], y[cv_idx]
    n_cv = x_cv.shape[0]
    perm = rng.permutation(n_cv)
    folds = np.array_split(perm, 5)

    losses = np.full((len(bandwidths), len(LAMBDA_GRID)), np.inf)
    conv_table = np.zeros((len(bandwidths), len(LAMBDA_GRID)), dtype=bool)
    for gi, bw in enumerate(bandwidths):
        fold_losses = np.zeros((5, len(LAMBDA_GRID)))
        fold_conv = np.ones((5, len(LAMBDA_GRID)), dtype=bool)
        for fi, test_idx in enumerate(folds):
            train_mask = np.ones(n_cv, dtype=bool)
            train_mask[test_idx] = False
            x_tr, y_tr = x_cv[train_mask], y_cv[train_mask]
            x_te, y_te = x_cv[test_idx], y_cv[test_idx]
            if x_tr.shape[0] > CV_CENTER_CAP:
                c_idx = np.sort(rng.choice(x_tr.shape[0], CV_CENTER_CAP, replace=False))
                centers = x_tr[c_idx]
            else:
                centers = x_tr
            kern = _rbf_kernel(x_tr, centers, bw)
            k_cc = _rbf_kernel(centers, centers, bw)
            kern_te = _rbf_kernel(x_te, centers, bw)
            init = None
            for li, lam in enumerate(LAMBDA_GRID):
                beta, b, ok = _fit_irls(kern, k_cc, y_tr, lam, CV_MAX_ITER, init)
                init = (beta, b)  # warm start the next lambda
                p_te = _sigmoid(kern_te @ beta + b)
                fold_losses[fi, li] = _log_loss(p_te, y_te)
                fold_conv[fi, li] &= ok
        losses[gi] = fold_losses.mean(axis=0)
        conv_table[gi] = fold_conv.all(axis=0)

    gi, li = np.unravel_index(int(np.argmin(losses)), losses.shape)
    bw, lam = bandwidths[gi], LAMBDA_GRID[li]

    # final fit on all rows; centers subsampled only on large mothersets
    if n > LARGE_N:
        c_idx = np.sort(rng.choice(n, size=CENTER_CAP, replace=False))
        centers = x[c_idx]
    else:
        centers = x
    kern = _rbf_kernel(x, centers, bw)
    k_cc = _rbf_kernel(centers, centers, bw)
    beta, b, ok = _fit_irls(kern, k_cc, y, lam, MAX_ITER)
    if not ok and conv_table.any():
        # fall back to the best grid point whose CV fits all converged
        masked = np.where(conv_table, losses, np.inf)
        gi2, li2 = np.unravel_index(int(np.argmin(masked)), masked.shape)
        if np.isfinite(masked[gi2, li2]) and (gi2, li2) != (gi, li):
            logger.warning(
                "IRLS did not converge at selected grid point (bw=%.4g, lam=%.4g); "
                "falling back to (bw=%.4g, lam=%.4g)",
                bw, lam, bandwidths[gi2], LAMBDA_GRID[li2],
            )
            bw, lam = bandwidths[gi2], LAMBDA_GRID[li2]
            kern = _rbf_kernel(x, centers, bw)
            k_cc = _rbf_kernel(centers, centers, bw)
            beta, b, ok = _fit_irls(kern, k_cc, y, lam, MAX_ITER)

    cv_losses = {
        f"bw={bandwidths[i]:.6g},lam={LAMBDA_GRID[j]:.6g}": float(losses[i, j])
        for i in range(len(bandwidths))
        for j in range(len(LAMBDA_GRID))
    }
    return DifficultyOracle(
        centers=centers,
        weights=np.append(beta, b),
        bandwidth=float(bw),
        regularization=float(lam),
        converged=bool(ok),
        cv_losses=cv_losses,
        selected=(float(bw), float(lam)),
        seed=seed,
    )


def score_difficulty(
    oracle: DifficultyOracle, points: np.ndarray, is_anomaly: np.ndarray | bool
) -> np.ndarray:
    """P(other class | point): the anomaly posterior for candidate normals and
    its complement for candidate anomalies."""
    p_anomaly = oracle.predict_proba(points)
    is_anomaly = np.broadcast_to(np.asarray(is_anomaly, dtype=bool), p_anomaly.shape)
    return np.where(is_anomaly, 1.0 - p_anomaly, p_anomaly)


def score_motherset(oracle: DifficultyOracle, mset: Motherset) -> np.ndarray:
    return score_difficulty(oracle, mset.features, mset.is_anomaly)
