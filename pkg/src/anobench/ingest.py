"""Turn supervised tabular datasets into candidate-normal / candidate-anomaly
mothersets.

Relabeling rules by task kind:

* binary -- the smaller class becomes the candidate anomalies; at equal sizes
  the class with greater total feature variance does.
* regression -- split at the median response (points exactly at the median go
  to the lower class), then apply the binary rule.
* multiclass -- partition the classes into two maximally confusable groups
  (random-forest confusion graph, maximum-weight spanning tree, two-colored
  by depth parity), then apply the binary rule.

Features are normalized to zero mean and unit sample variance once, at
Motherset construction; constant columns are dropped first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.ensemble import RandomForestClassifier

from .seeding import derive_seed

TASK_KINDS = ("binary", "multiclass", "regression")

SYNTHETIC_N_PER_CLASS = 10_000
SYNTHETIC_DIM = 10
SYNTHETIC_CUBE = 4.0

_FOREST_MIN_LEAF = 5


@dataclass
class RawDataset:
    """A parsed supervised dataset before relabeling."""

    name: str
    features: np.ndarray
    target: np.ndarray
    task_kind: str
    feature_names: tuple[str, ...] = ()
    dropped_columns: tuple[str, ...] = ()

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError("need at least one point and one feature")
        if len(self.target) != n:
            raise ValueError("target length does not match feature rows")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain missing or non-finite values")
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        if not self.feature_names:
            self.feature_names = tuple(f"V{j + 1}" for j in range(d))


@dataclass
class Motherset:
    """Normalized features plus the candidate-anomaly flags."""

    name: str
    features: np.ndarray
    is_anomaly: np.ndarray
    origin: str  # binary | multiclass | regression | synthetic
    dropped_columns: tuple[str, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.is_anomaly = np.asarray(self.is_anomaly, dtype=bool)
        if self.features.shape[0] != self.is_anomaly.shape[0]:
            raise ValueError("label length does not match feature rows")
        if self.is_anomaly.all() or not self.is_anomaly.any():
            raise ValueError("both candidate classes must be non-empty")

    @property
    def n_candidate_normals(self) -> int:
        return int((~self.is_anomaly).sum())

    @property
    def n_candidate_anomalies(self) -> int:
        return int(self.is_anomaly.sum())


@dataclass
class ConfusionGraph:
    """Symmetric class-confusion weights: entry (j, k) = C[j,k] + C[k,j]."""

    classes: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        k = len(self.classes)
        if w.shape != (k, k):
            raise ValueError("weight matrix shape does not match class count")
        if not np.allclose(w, w.T):
            raise ValueError("confusion weights must be symmetric")
        if (w < 0).any():
            raise ValueError("confusion weights must be non-negative")
        if np.diagonal(w).any():
            raise ValueError("confusion weights must have a zero diagonal")
        self.weights = w


def normalize_features(
    features: np.ndarray, feature_names: tuple[str, ...] | None = None
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Zero-mean unit-sample-variance columns; constant columns are dropped.

    Returns (normalized matrix, names of dropped columns).
    """
    features = np.asarray(features, dtype=float)
    n, d = features.shape
    if feature_names is None:
        feature_names = tuple(f"V{j + 1}" for j in range(d))
    if n < 2:
        raise ValueError("need at least two points to normalize")
    std = features.std(axis=0, ddof=1)
    keep = std > 0
    if not keep.any():
        raise ValueError("all feature columns are constant")
    dropped = tuple(name for name, k in zip(feature_names, keep) if not k)
    kept = features[:, keep]
    out = (kept - kept.mean(axis=0)) / kept.std(axis=0, ddof=1)
    # second pass kills the O(eps) residual mean from the first
    out = out - out.mean(axis=0)
    return out, dropped


def load_motherset(source, target_column: str, task_kind: str) -> RawDataset:
    """Parse a delimited text file with a header row into a RawDataset.

    Non-numeric feature columns are dropped.  A feature column that is more
    than half missing is dropped entirely; remaining rows with any missing
    value are rejected.
    """
    if task_kind not in TASK_KINDS:
        raise ValueError(f"unknown task kind {task_kind!r}")
    try:
        frame = pd.read_csv(source)
    except Exception as exc:
        raise ValueError(f"could not parse {source!r} as delimited text: {exc}") from exc
    if frame.shape[1] < 2 or frame.shape[0] < 1:
        raise ValueError(f"{source!r} has no usable rows or columns")
    if target_column not in frame.columns:
        raise ValueError(f"target column {target_column!r} not found in {source!r}")

    target = frame[target_column]
    feats = frame.drop(columns=[target_column])
    dropped: list[str] = []

    # mostly-missing columns go first (the Communities-and-Crime rule), so
    # their holes do not take whole rows with them
    frac_missing = feats.isna().mean()
    for col in feats.columns[frac_missing > 0.5]:
        dropped.append(str(col))
    feats = feats.drop(columns=feats.columns[frac_missing > 0.5])

    numeric = feats.apply(pd.to_numeric, errors="coerce")
    all_nan = numeric.isna().all()
    for col in feats.columns[all_nan]:
        dropped.append(str(col))
    numeric = numeric.drop(columns=numeric.columns[all_nan])
    # a column that parses for some rows but not others is categorical-ish,
    # not missing data: drop it rather than its rows
    originally_present = feats.notna()
    coerced_away = numeric.isna() & originally_present[numeric.columns]
    categorical = coerced_away.any()
    for col in numeric.columns[categorical]:
        dropped.append(str(col))
    numeric = numeric.drop(columns=numeric.columns[categorical])

    if numeric.shape[1] == 0:
        raise ValueError(f"no usable numeric feature columns in {source!r}")

    row_ok = numeric.notna().all(axis=1) & target.notna()
    numeric = numeric[row_ok]
    target = target[row_ok]
    if numeric.shape[0] < 1:
        raise ValueError(f"no complete rows left in {source!r}")

    if task_kind == "regression":
        target_values = pd.to_numeric(target, errors="coerce")
        if target_values.isna().any():
            raise ValueError("regression target contains non-numeric values")
        target_array = target_values.to_numpy(dtype=float)
    else:
        target_array = target.astype(str).to_numpy()

    name = getattr(source, "name", None) or str(source)
    return RawDataset(
        name=str(name),
        features=numeric.to_numpy(dtype=float),
        target=target_array,
        task_kind=task_kind,
        feature_names=tuple(str(c) for c in numeric.columns),
        dropped_columns=tuple(dropped),
    )


def _binary_rule(features: np.ndarray, group_a: np.ndarray, group_b: np.ndarray) -> np.ndarray:
    """Anomaly mask for two boolean groups: smaller group, variance tie-break."""
    n_a, n_b = int(group_a.sum()), int(group_b.sum())
    if n_a == 0 or n_b == 0:
        raise ValueError("a candidate class is empty after splitting")
    if n_a != n_b:
        return group_a if n_a < n_b else group_b
    var_a = float(features[group_a].var(axis=0, ddof=1).sum())
    var_b = float(features[group_b].var(axis=0, ddof=1).sum())
    return group_a if var_a >= var_b else group_b


def label_candidates(raw: RawDataset, seed: int = 0) -> Motherset:
    """Relabel a RawDataset into a normalized Motherset."""
    if raw.task_kind == "binary":
        values = np.unique(raw.target)
        if len(values) != 2:
            raise ValueError(f"binary task must have exactly 2 classes, got {len(values)}")
        group_a = raw.target == values[0]
        anomaly = _binary_rule(raw.features, group_a, ~group_a)
    elif raw.task_kind == "regression":
        median = float(np.median(raw.target))
        upper = raw.target > median
        if not upper.any() or upper.all():
            raise ValueError("all regression responses identical; no median split possible")
        anomaly = _binary_rule(raw.features, upper, ~upper)
    else:
        side_a, _ = confusion_partition(raw, seed)
        group_a = np.isin(raw.target, list(side_a))
        anomaly = _binary_rule(raw.features, group_a, ~group_a)

    features, dropped = normalize_features(raw.features, raw.feature_names)
    return Motherset(
        name=raw.name,
        features=features,
        is_anomaly=anomaly,
        origin=raw.task_kind,
        dropped_columns=raw.dropped_columns + dropped,
        seed=seed,
    )


def build_confusion_graph(raw: RawDataset, seed: int) -> ConfusionGraph:
    """Class-confusion weights from a random forest's out-of-bag probabilities."""
    classes = tuple(sorted(str(c) for c in np.unique(raw.target)))
    counts = {c: int((raw.target == c).sum()) for c in classes}
    too_small = [c for c, cnt in counts.items() if cnt < _FOREST_MIN_LEAF]
    if too_small:
        raise ValueError(
            f"classes {too_small} have fewer than {_FOREST_MIN_LEAF} points; "
            "the forest's minimum leaf size cannot be met"
        )
    forest = RandomForestClassifier(
        n_estimators=100,
        criterion="gini",
        max_features="sqrt",
        min_samples_leaf=_FOREST_MIN_LEAF,
        bootstrap=True,
        oob_score=True,
        random_state=derive_seed(seed, "confusion-forest") % (2**32),
        n_jobs=1,
    )
    y = raw.target.astype(str)
    forest.fit(raw.features, y)
    proba = forest.oob_decision_function_
    # points that were in-bag for every tree have no OOB vote; fall back to
    # the in-bag estimate for those rare rows
    missing = ~np.isfinite(proba).all(axis=1)
    if missing.any():
        proba = proba.copy()
        proba[missing] = forest.predict_proba(raw.features[missing])
    order = {c: i for i, c in enumerate(forest.classes_)}
    k = len(classes)
    confusion = np.zeros((k, k))
    for j, cls in enumerate(classes):
        rows = proba[y == cls]
        for m, other in enumerate(classes):
            confusion[j, m] = rows[:, order[other]].sum()
    weights = confusion + confusion.T
    np.fill_diagonal(weights, 0.0)
    return ConfusionGraph(classes=classes, weights=weights)


def _max_weight_spanning_tree(graph: ConfusionGraph) -> list[tuple[int, int]]:
    """Kruskal on negated weights; ties broken by lexicographic class order."""
    k = len(graph.classes)
    edges = sorted(
        ((j, m) for j in range(k) for m in range(j + 1, k)),
        key=lambda e: (-graph.weights[e], graph.classes[e[0]], graph.classes[e[1]]),
    )
    parent = list(range(k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree: list[tuple[int, int]] = []
    for j, m in edges:
        rj, rm = find(j), find(m)
        if rj != rm:
            parent[rj] = rm
            tree.append((j, m))
            if len(tree) == k - 1:
                break
    return tree


def two_color_tree(graph: ConfusionGraph) -> tuple[set[str], set[str]]:
    """Color the max-weight spanning tree by depth parity from the first class."""
    k = len(graph.classes)
    adjacency: dict[int, list[int]] = {i: [] for i in range(k)}
    for j, m in _max_weight_spanning_tree(graph):
        adjacency[j].append(m)
        adjacency[m].append(j)
    color = [-1] * k
    color[0] = 0  # root at the lexicographically smallest class
    queue = [0]
    while queue:
        node = queue.pop(0)
        for nxt in sorted(adjacency[node]):
            if color[nxt] == -1:
                color[nxt] = 1 - color[node]
                queue.append(nxt)
    even = {graph.classes[i] for i in range(k) if color[i] == 0}
    odd = {graph.classes[i] for i in range(k) if color[i] == 1}
    return even, odd


def confusion_partition(raw: RawDataset, seed: int = 0) -> tuple[set[str], set[str]]:
    """Split a multiclass problem into two maximally confusable class sets."""
    classes = sorted(str(c) for c in np.unique(raw.target))
    if len(classes) < 2:
        raise ValueError("need at least two classes to partition")
    if len(classes) == 2:
        return {classes[0]}, {classes[1]}
    graph = build_confusion_graph(raw, seed)
    return two_color_tree(graph)


def generate_synthetic(seed: int) -> Motherset:
    """Control motherset: 10,000 standard-Gaussian candidate normals and
    10,000 candidate anomalies uniform on (-4, 4)^10."""
    rng = np.random.default_rng(derive_seed(seed, "synthetic-motherset"))
    normals = rng.standard_normal((SYNTHETIC_N_PER_CLASS, SYNTHETIC_DIM))
    anomalies = rng.uniform(
        -SYNTHETIC_CUBE, SYNTHETIC_CUBE, (SYNTHETIC_N_PER_CLASS, SYNTHETIC_DIM)
    )
    features = np.vstack([normals, anomalies])
    is_anomaly = np.zeros(2 * SYNTHETIC_N_PER_CLASS, dtype=bool)
    is_anomaly[SYNTHETIC_N_PER_CLASS:] = True
    features, dropped = normalize_features(features)
    return Motherset(
        name="synthetic",
        features=features,
        is_anomaly=is_anomaly,
        origin="synthetic",
        dropped_columns=dropped,
        seed=seed,
    )
