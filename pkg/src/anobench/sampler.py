"""Benchmark construction under the four problem-dimension controls.

Points are drawn from the motherset one at a time, both classes mixed.  A
candidate is infeasible when adding it would

* push the running mean difficulty outside the pd bin (pd enforced),
* overrun the class budget implied by the rf target (rf enforced), or
* land normalized clusteredness on the wrong side of zero, including the
  degenerate all-anomalies-identical case (nc enforced, once both classes
  have two points).

Under an nc constraint, candidate weights are 1 + |delta nc| for points that
push clusteredness further from zero in the required direction, 1 otherwise.
If the rf budget cannot be completed, the most recently added points of the
over-represented class are removed (still honoring the other constraints)
until the target fraction holds exactly to integer rounding.

Size caps: a hard 90% of available candidate normals, a 6,000-point global
cap, and an optional tighter cap for desk-scale corpora.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .ingest import Motherset
from .levels import FI_RATIOS, NC_SIGNS, PD_BINS, RF_TARGETS, validate_level
from .seeding import derive_seed

GLOBAL_SIZE_CAP = 6_000
NORMALS_SHARE_CAP = 0.9
MIN_BENCHMARK_SIZE = 20
STALL_LIMIT = 10_000
PAIR_SAMPLE_CAP = 1_000
_VAR_FLOOR = 1e-12


class InfeasibleSpecError(Exception):
    """A spec's constraints cannot be satisfied on its motherset."""


@dataclass(frozen=True)
class BenchmarkSpec:
    motherset: str
    pd_level: str
    rf_level: str
    nc_level: str
    fi_level: str
    replicate: int
    seed: int

    def __post_init__(self):
        validate_level("pd", self.pd_level)
        validate_level("rf", self.rf_level)
        validate_level("nc", self.nc_level)
        validate_level("fi", self.fi_level)
        if self.replicate < 1:
            raise ValueError("replicate index starts at 1")

    @property
    def spec_id(self) -> str:
        return (
            f"{self.pd_level}_{self.rf_level}_{self.nc_level}_{self.fi_level}"
            f"_r{self.replicate:02d}"
        )

    @property
    def benchmark_id(self) -> str:
        return f"{self.motherset}__{self.spec_id}"


@dataclass
class Benchmark:
    features: np.ndarray
    is_anomaly: np.ndarray
    source_indices: np.ndarray
    measured: dict[str, float]
    spec: BenchmarkSpec

    @property
    def benchmark_id(self) -> str:
        return self.spec.benchmark_id

    @property
    def n_points(self) -> int:
        return int(self.features.shape[0])


def enumerate_specs(
    motherset: str,
    levels: dict[str, list[str]] | None = None,
    replicates: int = 5,
    master_seed: int = 0,
) -> list[BenchmarkSpec]:
    """Cartesian product of requested levels and replicate indices, each spec
    carrying a seed derived from (master seed, coordinates)."""
    levels = levels or {}
    pd_levels = [validate_level("pd", v) for v in levels.get("pd", list(PD_BINS))]
    rf_levels = [validate_level("rf", v) for v in levels.get("rf", list(RF_TARGETS))]
    nc_levels = [validate_level("nc", v) for v in levels.get("nc", list(NC_SIGNS))]
    fi_levels = [validate_level("fi", v) for v in levels.get("fi", list(FI_RATIOS))]
    specs = []
    for pd_l, rf_l, nc_l, fi_l, rep in product(
        pd_levels, rf_levels, nc_levels, fi_levels, range(1, replicates + 1)
    ):
        seed = derive_seed(master_seed, "spec", motherset, pd_l, rf_l, nc_l, fi_l, rep)
        specs.append(BenchmarkSpec(motherset, pd_l, rf_l, nc_l, fi_l, rep, seed))
    return specs


def total_sample_variance(points: np.ndarray) -> float:
    """Sample variance summed over feature columns."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 2:
        raise ValueError("need at least two points per class")
    return float(points.var(axis=0, ddof=1).sum())


def clusteredness(normal_points: np.ndarray, anomaly_points: np.ndarray) -> float:
    """log(var_normals / var_anomalies); +inf when the anomalies coincide."""
    var_n = total_sample_variance(normal_points)
    var_a = total_sample_variance(anomaly_points)
    if var_a <= _VAR_FLOOR:
        return float("inf")
    if var_n <= _VAR_FLOOR:
        return float("-inf")
    return float(np.log(var_n / var_a))


@dataclass
class _ClassState:
    """Running count / mean / total squared deviation of one class."""

    dim: int
    count: int = 0
    mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    ss: float = 0.0

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)

    def add(self, x: np.ndarray) -> None:
        delta = x - self.mean
        self.count += 1
        self.mean = self.mean + delta / self.count
        self.ss += float(delta @ (x - self.mean))

    def refit(self, points: np.ndarray) -> None:
        self.count = points.shape[0]
        if self.count == 0:
            self.mean = np.zeros(self.dim)
            self.ss = 0.0
        else:
            self.mean = points.mean(axis=0)
            self.ss = float(((points - self.mean) ** 2).sum())

    @property
    def variance(self) -> float:
        if self.count < 2:
            return float("nan")
        return self.ss / (self.count - 1)

    def ss_after_adding(self, candidates: np.ndarray, sq_norms: np.ndarray) -> np.ndarray:
        """Vector of total squared deviations if each candidate were added."""
        if self.count == 0:
            return np.zeros(candidates.shape[0])
        dist_sq = sq_norms - 2.0 * (candidates @ self.mean) + float(self.mean @ self.mean)
        np.maximum(dist_sq, 0.0, out=dist_sq)
        return self.ss + (self.count / (self.count + 1)) * dist_sq


def _anomaly_budget(rho: float, n: int) -> int:
    return int(np.floor(rho * n + 0.5))


def _plan_target(
    rho: float | None, n_norm_avail: int, n_anom_avail: int, size_cap: int
) -> tuple[int, int | None, int]:
    """Target benchmark size plus class budgets (anomaly budget None for rf-0)."""
    cap_n = int(np.floor(NORMALS_SHARE_CAP * n_norm_avail))
    hard_cap = min(size_cap, GLOBAL_SIZE_CAP)
    if rho is None:
        n = min(hard_cap, cap_n + n_anom_avail)
        return n, None, cap_n
    n = min(hard_cap, cap_n + n_anom_avail)
    while n >= 2:
        budget_a = _anomaly_budget(rho, n)
        if budget_a >= 1 and budget_a <= n_anom_avail and (n - budget_a) <= cap_n:
            return n, budget_a, cap_n
        n -= 1
    raise InfeasibleSpecError("relative-frequency target admits no feasible size")


MAX_ATTEMPTS = 5


def sample_benchmark(
    mset: Motherset,
    difficulty: np.ndarray,
    spec: BenchmarkSpec,
    size_cap: int = GLOBAL_SIZE_CAP,
) -> Benchmark:
    """Draw one benchmark honoring spec constraints; raises
    InfeasibleSpecError when they cannot be met.

    Greedy one-at-a-time sampling can wedge itself early (the first anomaly
    drawn may be incompatible with the required clusteredness sign), so a few
    deterministic restarts with derived sub-seeds are attempted before the
    spec is declared infeasible.
    """
    last_error: InfeasibleSpecError | None = None
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng(derive_seed(spec.seed, "attempt", attempt))
        try:
            return _sample_once(mset, difficulty, spec, size_cap, rng)
        except InfeasibleSpecError as exc:
            last_error = exc
    raise last_error


def _sample_once(
    mset: Motherset,
    difficulty: np.ndarray,
    spec: BenchmarkSpec,
    size_cap: int,
    rng: np.random.Generator,
) -> Benchmark:
    x = mset.features
    n_total, dim = x.shape
    difficulty = np.asarray(difficulty, dtype=float)
    if difficulty.shape[0] != n_total:
        raise ValueError("difficulty table does not cover the motherset")

    pd_bin = PD_BINS[spec.pd_level]
    rho = RF_TARGETS[spec.rf_level]
    nc_sign = NC_SIGNS[spec.nc_level]

    is_anom = mset.is_anomaly
    n_anom_avail = int(is_anom.sum())
    n_norm_avail = n_total - n_anom_avail
    target_n, budget_a, cap_n = _plan_target(rho, n_norm_avail, n_anom_avail, size_cap)
    budget_n = (target_n - budget_a) if budget_a is not None else cap_n

    sq_norms = (x * x).sum(axis=1)
    available = np.ones(n_total, dtype=bool)
    chosen: list[int] = []
    diff_sum = 0.0
    state = {False: _ClassState(dim), True: _ClassState(dim)}
    counts = {False: 0, True: 0}
    steps = 0

    def nc_value() -> float:
        var_n = state[False].variance
        var_a = state[True].variance
        if np.isnan(var_n) or np.isnan(var_a):
            return float("nan")
        if var_a <= _VAR_FLOOR:
            return float("inf")
        if var_n <= _VAR_FLOOR:
            return float("-inf")
        return float(np.log(var_n / var_a))

    while len(chosen) < target_n:
        steps += 1
        if steps > STALL_LIMIT + 2 * target_n:
            raise InfeasibleSpecError("sampling stalled; constraints too tight")
        cand_idx = np.flatnonzero(available)
        if budget_a is not None:
            class_ok = np.where(
                is_anom[cand_idx], counts[True] < budget_a, counts[False] < budget_n
            )
            cand_idx = cand_idx[class_ok]
        else:
            # the 90% normals cap binds even without an rf target
            if counts[False] >= budget_n:
                cand_idx = cand_idx[is_anom[cand_idx]]
        if cand_idx.size == 0:
            break

        feasible = np.ones(cand_idx.size, dtype=bool)
        k = len(chosen)
        if pd_bin is not None:
            new_mean = (diff_sum + difficulty[cand_idx]) / (k + 1)
            if pd_bin.lo_inclusive:
                feasible &= (new_mean >= pd_bin.lo) & (new_mean < pd_bin.hi)
            else:
                feasible &= (new_mean > pd_bin.lo) & (new_mean < pd_bin.hi)

        weights = None
        if nc_sign is not None:
            cand_anom = is_anom[cand_idx]
            new_nc = np.full(cand_idx.size, np.nan)
            degenerate = np.zeros(cand_idx.size, dtype=bool)
            for cls in (False, True):
                rows = np.flatnonzero(cand_anom == cls)
                if rows.size == 0:
                    continue
                cnt_this = counts[cls] + 1  # class counts after the add
                cnt_other = counts[not cls]
                if cnt_this < 2 or cnt_other < 2:
                    continue  # clusteredness undefined; no constraint yet
                pts = x[cand_idx[rows]]
                ss_new = state[cls].ss_after_adding(pts, sq_norms[cand_idx[rows]])
                var_new = ss_new / (cnt_this - 1)
                var_other = state[not cls].variance
                # zero class variance is the infinity sentinel: reject outright
                degenerate[rows] = var_new <= _VAR_FLOOR
                safe = np.maximum(var_new, _VAR_FLOOR)
                if cls:  # candidate anomaly changes the denominator class
                    new_nc[rows] = np.log(var_other / safe)
                else:
                    new_nc[rows] = np.log(safe / var_other)
            wrong_side = np.isfinite(new_nc) & (np.sign(new_nc) == -nc_sign)
            feasible &= ~wrong_side & ~degenerate
            cur = nc_value()
            if np.isfinite(cur):
                gain = np.where(np.isfinite(new_nc), nc_sign * (new_nc - cur), 0.0)
            else:
                # transition draw: favor starts already deep on the right side
                gain = np.where(np.isfinite(new_nc), nc_sign * new_nc, 0.0)
            weights = 1.0 + np.maximum(gain, 0.0)

        cand_idx = cand_idx[feasible]
        if cand_idx.size == 0:
            break
        if weights is not None:
            weights = weights[feasible]
            probs = weights / weights.sum()
            pick = int(rng.choice(cand_idx, p=probs))
        else:
            pick = int(rng.choice(cand_idx))

        chosen.append(pick)
        available[pick] = False
        diff_sum += difficulty[pick]
        cls = bool(is_anom[pick])
        state[cls].add(x[pick])
        counts[cls] += 1

    if budget_a is not None:
        chosen = _backtrack_to_ratio(
            chosen, x, is_anom, difficulty, pd_bin, nc_sign, rho, steps
        )
        counts = {
            False: sum(1 for i in chosen if not is_anom[i]),
            True: sum(1 for i in chosen if is_anom[i]),
        }

    return _finalize(mset, difficulty, spec, chosen, nc_sign, pd_bin)


def _backtrack_to_ratio(
    chosen: list[int],
    x: np.ndarray,
    is_anom: np.ndarray,
    difficulty: np.ndarray,
    pd_bin,
    nc_sign,
    rho: float,
    steps: int,
) -> list[int]:
    """Remove most-recent points of the over-represented class until the
    anomaly count matches the rf target exactly to rounding."""

    def satisfied(seq: list[int]) -> bool:
        n = len(seq)
        n_a = int(sum(1 for i in seq if is_anom[i]))
        return n >= 2 and n_a >= 1 and (n - n_a) >= 1 and n_a == _anomaly_budget(rho, n)

    def constraints_ok(seq: list[int]) -> bool:
        if pd_bin is not None:
            mean = float(np.mean([difficulty[i] for i in seq]))
            if not pd_bin.contains(mean):
                return False
        if nc_sign is not None:
            pts_n = x[[i for i in seq if not is_anom[i]]]
            pts_a = x[[i for i in seq if is_anom[i]]]
            if pts_n.shape[0] >= 2 and pts_a.shape[0] >= 2:
                nc = clusteredness(pts_n, pts_a)
                if not np.isfinite(nc) or np.sign(nc) == -nc_sign:
                    return False
        return True

    while not satisfied(chosen):
        steps += 1
        if steps > STALL_LIMIT * 2 or len(chosen) <= 2:
            raise InfeasibleSpecError("could not meet relative-frequency target")
        n = len(chosen)
        n_a = sum(1 for i in chosen if is_anom[i])
        over_anom = n_a > _anomaly_budget(rho, n)
        removed = False
        for pos in range(n - 1, -1, -1):
            if bool(is_anom[chosen[pos]]) != over_anom:
                continue
            trial = chosen[:pos] + chosen[pos + 1 :]
            if constraints_ok(trial):
                chosen = trial
                removed = True
                break
        if not removed:
            raise InfeasibleSpecError(
                "relative-frequency backtracking blocked by other constraints"
            )
    return chosen


def _finalize(
    mset: Motherset,
    difficulty: np.ndarray,
    spec: BenchmarkSpec,
    chosen: list[int],
    nc_sign,
    pd_bin,
) -> Benchmark:
    if len(chosen) < MIN_BENCHMARK_SIZE:
        raise InfeasibleSpecError(
            f"only {len(chosen)} feasible points (minimum {MIN_BENCHMARK_SIZE})"
        )
    idx = np.asarray(chosen, dtype=np.int64)
    labels = mset.is_anomaly[idx]
    n_a = int(labels.sum())
    n_n = labels.size - n_a
    if n_a == 0 or n_n == 0:
        raise InfeasibleSpecError("a class is empty in the sampled benchmark")
    feats = mset.features[idx]
    mean_diff = float(difficulty[idx].mean())
    if pd_bin is not None and not pd_bin.contains(mean_diff):
        raise InfeasibleSpecError("mean difficulty left its bin")
    if n_a >= 2 and n_n >= 2:
        nc = clusteredness(feats[~labels], feats[labels])
    else:
        nc = float("nan")
    if nc_sign is not None:
        if not np.isfinite(nc) or np.sign(nc) == -nc_sign or nc == 0.0:
            raise InfeasibleSpecError("clusteredness sign constraint unsatisfied")
    measured = {
        "mean_difficulty": mean_diff,
        "anomaly_fraction": n_a / labels.size,
        "clusteredness": nc,
        "distance_ratio": 1.0,
    }
    return Benchmark(
        features=feats,
        is_anomaly=labels,
        source_indices=idx,
        measured=measured,
        spec=spec,
    )


# ------------------------------------------------------- feature irrelevance


def estimated_extra_features(d: int, alpha: float) -> int:
    """Growth-argument estimate: pairwise distance scales with sqrt(d), so
    hitting ratio alpha needs about (alpha * sqrt(d))^2 total dimensions."""
    d_hat = int(round(alpha * alpha * d))
    return max(d_hat - d, 0)


def _pair_index_arrays(
    n: int, rng: np.random.Generator, cap: int = PAIR_SAMPLE_CAP
) -> tuple[np.ndarray, np.ndarray]:
    if n > cap:
        rows = np.sort(rng.choice(n, size=cap, replace=False))
    else:
        rows = np.arange(n)
    ii, jj = np.triu_indices(rows.size, k=1)
    return rows[ii], rows[jj]


def mean_pairwise_distance(
    points: np.ndarray,
    rng: np.random.Generator | None = None,
    cap: int = PAIR_SAMPLE_CAP,
) -> float:
    """Mean euclidean distance over all pairs, subsampling min(n, cap) rows."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 2:
        raise ValueError("need at least two points")
    rng = rng or np.random.default_rng(0)
    pi, pj = _pair_index_arrays(points.shape[0], rng, cap)
    diff = points[pi] - points[pj]
    return float(np.sqrt((diff * diff).sum(axis=1)).mean())


def augment_irrelevant(
    bench: Benchmark, alpha: float, mset: Motherset, seed: int
) -> Benchmark:
    """Append label-free features (bootstrap resamples of random motherset
    columns) until the mean pairwise distance ratio is as close to alpha as
    single-feature steps allow."""
    if alpha < 1.0:
        raise ValueError("distance ratio alpha must be at least 1.0")
    if alpha == 1.0:
        bench.measured["distance_ratio"] = 1.0
        return bench

    rng = np.random.default_rng(derive_seed(seed, "augment"))
    n, d = bench.features.shape
    pi, pj = _pair_index_arrays(n, rng)
    base_sq = ((bench.features[pi] - bench.features[pj]) ** 2).sum(axis=1)
    base_mean = float(np.sqrt(base_sq).mean())

    def make_column() -> np.ndarray:
        src = int(rng.integers(mset.features.shape[1]))
        values = mset.features[:, src]
        return values[rng.integers(values.shape[0], size=n)]

    columns: list[np.ndarray] = []
    cur_sq = base_sq.copy()

    def ratio() -> float:
        return float(np.sqrt(cur_sq).mean()) / base_mean

    def push() -> None:
        col = make_column()
        columns.append(col)
        np.add(cur_sq, (col[pi] - col[pj]) ** 2, out=cur_sq)

    popped: list[np.ndarray] = []

    def pop() -> None:
        col = columns.pop()
        popped.append(col)
        np.subtract(cur_sq, (col[pi] - col[pj]) ** 2, out=cur_sq)

    def unpop() -> None:
        col = popped.pop()
        columns.append(col)
        np.add(cur_sq, (col[pi] - col[pj]) ** 2, out=cur_sq)

    for _ in range(estimated_extra_features(d, alpha)):
        push()

    hard_cap = 4 * estimated_extra_features(d, alpha) + 64
    history = [(len(columns), ratio())]
    if ratio() < alpha:
        while ratio() < alpha and len(columns) < hard_cap:
            push()
            history.append((len(columns), ratio()))
    else:
        while ratio() > alpha and columns:
            pop()
            history.append((len(columns), ratio()))
    # the walk straddles alpha; keep the closer endpoint
    best_k, best_r = min(history[-2:], key=lambda kr: abs(kr[1] - alpha))
    while len(columns) > best_k:
        pop()
    while len(columns) < best_k:
        unpop()

    if columns:
        features = np.hstack([bench.features] + [c[:, None] for c in columns])
    else:
        features = bench.features
    measured = dict(bench.measured)
    measured["distance_ratio"] = best_r
    return Benchmark(
        features=features,
        is_anomaly=bench.is_anomaly,
        source_indices=bench.source_indices,
        measured=measured,
        spec=bench.spec,
    )
