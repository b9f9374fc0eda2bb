"""Null distributions of AUC and AP under uniformly random ranking.

Both metrics depend only on the set of ranks occupied by anomalies, so the
null is the distribution over the C(n, n_a) equally likely position sets
rather than over n! orderings.  Three computation paths:

* exact enumeration over position sets when C(n, n_a) <= the exact limit
  (both metrics in one sweep);
* an exact rank-sum DP for AUC at any shape (the AUC null depends only on
  the Mann-Whitney statistic, whose counts are Gaussian-binomial
  coefficients), used when exactness is requested beyond the enumeration
  limit -- no such shortcut exists for AP;
* Monte Carlo over random position sets otherwise (default 1e6 samples).

The critical value at level alpha is the smallest achieved metric value v
with P(X > v) <= alpha; a result rejects the random-ranking null iff it
strictly exceeds the critical value.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

DEFAULT_ALPHAS = (0.05, 0.01, 0.001)
DEFAULT_MC_SAMPLES = 1_000_000
EXACT_LIMIT = 1_000_000

METRICS = ("auc", "ap")


@dataclass(frozen=True)
class NullQuantiles:
    """Critical values of one metric's null for one (n_anom, n_norm) shape."""

    n_anom: int
    n_norm: int
    metric: str
    mode: str  # "exact" or "mc"
    samples: int | None
    quantiles: dict[float, float] = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> str:
        payload = {
            "n_anom": self.n_anom,
            "n_norm": self.n_norm,
            "metric": self.metric,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
            "quantiles": {repr(a): v for a, v in sorted(self.quantiles.items())},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NullQuantiles":
        payload = json.loads(text)
        payload["quantiles"] = {
            float(a): float(v) for a, v in payload["quantiles"].items()
        }
        return cls(**payload)


def _critical_values(
    values: np.ndarray, alphas: tuple[float, ...]
) -> dict[float, float]:
    """Smallest achieved value v with P(X > v) <= alpha, per alpha.

    ``values`` are equally weighted realizations (exact support expanded by
    multiplicity is not required; pass probabilities via ``weights``-free
    equal sampling or pre-expanded arrays).
    """
    values = np.sort(np.asarray(values, dtype=float))
    total = values.size
    uniq, start = np.unique(values, return_index=True)
    # count strictly greater than uniq[i]
    greater = total - (np.append(start[1:], total))
    tail = greater / total
    out: dict[float, float] = {}
    for alpha in alphas:
        idx = np.flatnonzero(tail <= alpha)
        # the maximum always has empty tail, so idx is never empty
        out[alpha] = float(uniq[idx[0]])
    return out


def _critical_values_weighted(
    values: np.ndarray, probs: np.ndarray, alphas: tuple[float, ...]
) -> dict[float, float]:
    order = np.argsort(values)
    values = values[order]
    probs = probs[order]
    tail = np.concatenate([np.cumsum(probs[::-1])[::-1][1:], [0.0]])
    out: dict[float, float] = {}
    for alpha in alphas:
        idx = np.flatnonzero(tail <= alpha + 1e-15)
        out[alpha] = float(values[idx[0]])
    return out


def _enumerate_position_sets(n_anom: int, n: int) -> np.ndarray:
    combos = np.array(list(combinations(range(n), n_anom)), dtype=np.int64)
    return combos.reshape(-1, n_anom)


def _metrics_from_rank_sets(ranks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """AUC and AP for each row of sorted 0-based anomaly rank sets."""
    n_a = ranks.shape[1]
    n_n = n - n_a
    su = ranks.sum(axis=1)
    aucs = 1.0 - (su - n_a * (n_a - 1) / 2.0) / (n_a * n_n)
    j = np.arange(1, n_a + 1, dtype=float)
    aps = np.mean(j / (ranks + 1.0), axis=1)
    return aucs, aps


def auc_null_distribution(n_anom: int, n_norm: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact AUC null for any shape via the Mann-Whitney rank-sum DP.

    The count of position sets with U discordant pairs is the coefficient of
    q^U in the Gaussian binomial [n choose n_a]_q, i.e. the number of
    partitions of U into at most n_a parts each at most n_norm.  Returns
    (auc values ascending, probabilities).
    """
    u_max = n_anom * n_norm
    f = np.zeros(u_max + 1)
    f[0] = 1.0
    for i in range(1, n_anom + 1):
        # multiply by 1/(1 - q^i): running sums within each residue class
        for r in range(min(i, u_max + 1)):
            np.cumsum(f[r::i], out=f[r::i])
        # multiply by (1 - q^(n_norm + i))
        shift = n_norm + i
        if shift <= u_max:
            f[shift:] -= f[: u_max + 1 - shift].copy()
        # keep magnitudes in float range; only ratios matter
        f /= f.max()
    probs = f / f.sum()
    u = np.arange(u_max + 1)
    aucs = 1.0 - u / float(u_max)
    order = np.argsort(aucs)
    return aucs[order], probs[order]


if _HAVE_NUMBA:

    @njit(cache=True)
    def _mc_rank_metrics(n_anom, n, n_samples, seed):  # pragma: no cover - jitted
        np.random.seed(seed)
        aucs = np.empty(n_samples)
        aps = np.empty(n_samples)
        chosen = np.empty(n_anom, np.int64)
        mark = np.zeros(n, np.uint8)
        n_norm = n - n_anom
        for s in range(n_samples):
            # Floyd's algorithm: uniform n_anom-subset of range(n)
            cnt = 0
            for j in range(n - n_anom, n):
                t = np.random.randint(0, j + 1)
                if mark[t]:
                    chosen[cnt] = j
                    mark[j] = 1
                else:
                    chosen[cnt] = t
                    mark[t] = 1
                cnt += 1
            ranks = np.sort(chosen)
            su = 0.0
            ap = 0.0
            for j in range(n_anom):
                su += ranks[j]
                ap += (j + 1.0) / (ranks[j] + 1.0)
                mark[ranks[j]] = 0
            aucs[s] = 1.0 - (su - n_anom * (n_anom - 1) / 2.0) / (n_anom * n_norm)
            aps[s] = ap / n_anom
        return aucs, aps


def _mc_rank_metrics_numpy(
    n_anom: int, n: int, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    aucs = np.empty(n_samples)
    aps = np.empty(n_samples)
    chunk = max(1, min(n_samples, 2_000_000 // max(n, 1)))
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        keys = rng.random((m, n))
        ranks = np.sort(np.argpartition(keys, n_anom - 1, axis=1)[:, :n_anom], axis=1)
        a, p = _metrics_from_rank_sets(ranks, n)
        aucs[done : done + m] = a
        aps[done : done + m] = p
        done += m
    return aucs, aps


def _mc_samples_pair(
    n_anom: int, n: int, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    if _HAVE_NUMBA:
        return _mc_rank_metrics(n_anom, n, n_samples, seed & 0x7FFFFFFF)
    return _mc_rank_metrics_numpy(n_anom, n, n_samples, seed)


def null_quantiles_pair(
    n_anom: int,
    n_norm: int,
    seed: int = 0,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    mode: str = "auto",
    samples: int = DEFAULT_MC_SAMPLES,
    exact_limit: int = EXACT_LIMIT,
) -> tuple[NullQuantiles, NullQuantiles]:
    """AUC and AP nulls for one shape, sharing one enumeration/sampling pass."""
    if n_anom < 1 or n_norm < 1:
        raise ValueError("need at least one anomaly and one nominal")
    n = n_anom + n_norm
    n_sets = math.comb(n, n_anom)
    if mode == "auto":
        mode = "exact" if n_sets <= exact_limit else "mc"
    if mode == "exact":
        if n_sets > exact_limit:
            raise ValueError(
                f"exact enumeration infeasible: C({n},{n_anom})={n_sets} position sets; "
                "use auc_null_distribution for exact AUC beyond the limit"
            )
        ranks = _enumerate_position_sets(n_anom, n)
        aucs, aps = _metrics_from_rank_sets(ranks, n)
        q_auc = _critical_values(aucs, alphas)
        q_ap = _critical_values(aps, alphas)
        return (
            NullQuantiles(n_anom, n_norm, "auc", "exact", None, q_auc, None),
            NullQuantiles(n_anom, n_norm, "ap", "exact", None, q_ap, None),
        )
    if mode == "mc":
        aucs, aps = _mc_samples_pair(n_anom, n, samples, seed)
        q_auc = _critical_values(aucs, alphas)
        q_ap = _critical_values(aps, alphas)
        return (
            NullQuantiles(n_anom, n_norm, "auc", "mc", samples, q_auc, seed),
            NullQuantiles(n_anom, n_norm, "ap", "mc", samples, q_ap, seed),
        )
    raise ValueError(f"unknown mode {mode!r}")


def null_quantiles(
    n_anom: int,
    n_norm: int,
    metric: str,
    seed: int = 0,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    mode: str = "auto",
    samples: int = DEFAULT_MC_SAMPLES,
    exact_limit: int = EXACT_LIMIT,
) -> NullQuantiles:
    """Null quantiles for one metric.

    ``mode="exact"`` with a shape beyond the enumeration limit is honored for
    AUC through the rank-sum DP; for AP it raises, since the AP null has no
    sufficient statistic smaller than the full position set.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if n_anom < 1 or n_norm < 1:
        raise ValueError("need at least one anomaly and one nominal")
    n = n_anom + n_norm
    n_sets = math.comb(n, n_anom)
    if mode == "exact" and n_sets > exact_limit:
        if metric == "auc":
            values, probs = auc_null_distribution(n_anom, n_norm)
            q = _critical_values_weighted(values, probs, alphas)
            return NullQuantiles(n_anom, n_norm, "auc", "exact", None, q, None)
        raise ValueError(
            f"exact AP null infeasible: C({n},{n_anom})={n_sets} position sets"
        )
    pair = null_quantiles_pair(n_anom, n_norm, seed, alphas, mode, samples, exact_limit)
    return pair[0] if metric == "auc" else pair[1]


def test_result(value: float, nulls: NullQuantiles, alpha: float) -> bool:
    """True (reject the random-ranking null) iff value strictly exceeds the
    critical value at ``alpha``."""
    if alpha not in nulls.quantiles:
        raise ValueError(f"alpha {alpha} not in computed quantiles")
    return bool(value > nulls.quantiles[alpha])


test_result.__test__ = False  # keep pytest from collecting the operation


def benchmark_failure(rejects: dict[str, bool]) -> bool:
    """True iff every detector failed to reject on this benchmark."""
    if not rejects:
        raise ValueError("no detector records for benchmark failure")
    return not any(rejects.values())


def either_failure(auc_rejects: dict[str, bool], ap_rejects: dict[str, bool]) -> bool:
    """True iff all detectors fail under at least one of the two metrics."""
    return benchmark_failure(auc_rejects) or benchmark_failure(ap_rejects)


class NullCache:
    """Disk cache of NullQuantiles keyed by everything they depend on.

    Writes are atomic (tmp file + rename), so concurrent workers computing the
    same key are idempotent.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(
        self, metric: str, n_anom: int, n_norm: int, mode: str, samples, seed
    ) -> Path:
        if mode == "exact":
            name = f"{metric}_a{n_anom}_n{n_norm}_exact.json"
        else:
            name = f"{metric}_a{n_anom}_n{n_norm}_mc_s{samples}_seed{seed}.json"
        return self.directory / name

    def get_pair(
        self,
        n_anom: int,
        n_norm: int,
        seed: int = 0,
        alphas: tuple[float, ...] = DEFAULT_ALPHAS,
        samples: int = DEFAULT_MC_SAMPLES,
        exact_limit: int = EXACT_LIMIT,
    ) -> tuple[NullQuantiles, NullQuantiles]:
        n = n_anom + n_norm
        mode = "exact" if math.comb(n, n_anom) <= exact_limit else "mc"
        loaded = []
        for metric in METRICS:
            path = self._path(metric, n_anom, n_norm, mode, samples, seed)
            if path.exists():
                nq = NullQuantiles.from_json(path.read_text())
                if all(a in nq.quantiles for a in alphas):
                    loaded.append(nq)
        if len(loaded) == 2:
            return loaded[0], loaded[1]
        pair = null_quantiles_pair(
            n_anom, n_norm, seed, alphas, mode, samples, exact_limit
        )
        for nq in pair:
            path = self._path(nq.metric, n_anom, n_norm, nq.mode, samples, seed)
            tmp = path.with_suffix(f".tmp.{os.getpid()}")
            tmp.write_text(nq.to_json())
            os.replace(tmp, path)
        return pair
