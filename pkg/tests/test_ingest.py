import numpy as np
import pytest

from anobench.artifacts import read_motherset_files, write_motherset_files
from anobench.ingest import (
    ConfusionGraph,
    RawDataset,
    build_confusion_graph,
    confusion_partition,
    generate_synthetic,
    label_candidates,
    load_motherset,
    normalize_features,
    two_color_tree,
)


class TestLoadMotherset:
    def test_minimal_binary_csv(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("f1,cls\n1.0,a\n2.0,a\n3.0,b\n4.0,b\n")
        raw = load_motherset(path, "cls", "binary")
        assert raw.features.shape == (4, 1)
        assert raw.task_kind == "binary"

    def test_text_feature_column_dropped(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "f1,color,f2,cls\n1.0,red,5.0,a\n2.0,blue,6.0,a\n3.0,red,7.0,b\n4.0,green,8.0,b\n"
        )
        raw = load_motherset(path, "cls", "binary")
        assert raw.features.shape == (4, 2)
        assert "color" in raw.dropped_columns

    def test_mostly_missing_column_dropped_rows_kept(self, tmp_path):
        path = tmp_path / "m.csv"
        rows = ["f1,f2,cls"]
        for i in range(10):
            f2 = "" if i < 6 else "1.5"  # 60% missing
            rows.append(f"{i}.0,{f2},{'a' if i % 2 else 'b'}")
        path.write_text("\n".join(rows) + "\n")
        raw = load_motherset(path, "cls", "binary")
        assert raw.features.shape == (10, 1)
        assert "f2" in raw.dropped_columns

    def test_sparse_missing_drops_rows(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("f1,f2,cls\n1.0,1.0,a\n2.0,,a\n3.0,3.0,b\n4.0,4.0,b\n")
        raw = load_motherset(path, "cls", "binary")
        assert raw.features.shape == (3, 2)

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("f1,cls\n1.0,a\n")
        with pytest.raises(ValueError, match="target column"):
            load_motherset(path, "nope", "binary")

    def test_no_numeric_features(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("color,cls\nred,a\nblue,b\n")
        with pytest.raises(ValueError, match="numeric"):
            load_motherset(path, "cls", "binary")

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"\x00\x01\x02\xff" * 10)
        with pytest.raises(ValueError):
            load_motherset(path, "cls", "binary")


class TestLabelCandidates:
    def _raw(self, features, target, kind):
        return RawDataset("t", np.asarray(features, float), np.asarray(target), kind)

    def test_smaller_class_becomes_anomaly(self):
        rng = np.random.default_rng(0)
        features = rng.normal(size=(1000, 3))
        target = np.array(["big"] * 700 + ["small"] * 300)
        mset = label_candidates(self._raw(features, target, "binary"))
        assert mset.is_anomaly.sum() == 300
        assert mset.is_anomaly[-1] and not mset.is_anomaly[0]

    def test_equal_sizes_variance_tiebreak(self):
        rng = np.random.default_rng(1)
        low = rng.normal(0, 1.0, size=(500, 2))
        high = rng.normal(0, np.sqrt(2.0), size=(500, 2))
        features = np.vstack([low, high])
        target = np.array(["low"] * 500 + ["high"] * 500)
        mset = label_candidates(self._raw(features, target, "binary"))
        assert mset.is_anomaly[500:].all()
        assert not mset.is_anomaly[:500].any()

    def test_anomalies_never_outnumber_normals_binary(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            n_a = int(rng.integers(5, 50))
            n_b = int(rng.integers(5, 50))
            features = rng.normal(size=(n_a + n_b, 2))
            target = np.array(["a"] * n_a + ["b"] * n_b)
            mset = label_candidates(self._raw(features, target, "binary"))
            assert mset.n_candidate_anomalies <= mset.n_candidate_normals

    def test_regression_median_split(self):
        features = np.array([[1.0], [2.0], [3.0], [4.0]])
        target = np.array([1.0, 2.0, 3.0, 4.0])
        mset = label_candidates(self._raw(features, target, "regression"))
        # median 2.5 partitions responses into {1,2} and {3,4}; the variance
        # tie-break then picks which side is the anomaly class
        groups = {tuple(np.flatnonzero(mset.is_anomaly))}
        assert groups <= {(0, 1), (2, 3)}

    def test_regression_median_points_go_low(self):
        features = np.arange(10, dtype=float).reshape(-1, 1)
        target = np.array([1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0])
        mset = label_candidates(self._raw(features, target, "regression"))
        upper = set(np.flatnonzero(mset.is_anomaly))
        lower = set(np.flatnonzero(~mset.is_anomaly))
        # median of the responses is 2.5: the 3.0s go up, the 2.0s stay low
        assert {5, 6, 7, 8, 9} in (upper, lower)

    def test_regression_straddle_separated(self):
        rng = np.random.default_rng(3)
        target = rng.normal(size=101)
        features = rng.normal(size=(101, 2))
        mset = label_candidates(self._raw(features, target, "regression"))
        median = np.median(target)
        above = target > median
        # every pair straddling the median lands in different classes
        assert len(set(mset.is_anomaly[above])) == 1
        assert len(set(mset.is_anomaly[~above])) == 1
        assert mset.is_anomaly[above][0] != mset.is_anomaly[~above][0]

    def test_constant_regression_response_rejected(self):
        with pytest.raises(ValueError, match="identical"):
            label_candidates(
                self._raw(np.eye(4), np.array([2.0, 2.0, 2.0, 2.0]), "regression")
            )

    def test_normalization_invariants(self):
        rng = np.random.default_rng(4)
        features = rng.normal(3.0, 5.0, size=(200, 4))
        target = np.array(["a"] * 80 + ["b"] * 120)
        mset = label_candidates(self._raw(features, target, "binary"))
        assert np.abs(mset.features.mean(axis=0)).max() < 1e-9
        assert np.abs(mset.features.var(axis=0, ddof=1) - 1).max() < 1e-6

    def test_constant_column_dropped(self):
        rng = np.random.default_rng(5)
        features = np.column_stack([rng.normal(size=50), np.full(50, 7.0)])
        target = np.array(["a"] * 20 + ["b"] * 30)
        mset = label_candidates(self._raw(features, target, "binary"))
        assert mset.features.shape[1] == 1
        assert len(mset.dropped_columns) == 1


class TestNormalization:
    def test_idempotence(self):
        rng = np.random.default_rng(6)
        features = rng.normal(2.0, 3.0, size=(100, 5))
        once, _ = normalize_features(features)
        twice, _ = normalize_features(once)
        assert np.abs(once - twice).max() < 1e-9


class TestConfusionPartition:
    def _chain_dataset(self, seed=0):
        # A-B overlap and B-C overlap, A-C do not
        rng = np.random.default_rng(seed)
        a = rng.normal(0.0, 0.8, size=(120, 1))
        b = rng.normal(2.0, 0.8, size=(120, 1))
        c = rng.normal(4.0, 0.8, size=(120, 1))
        features = np.vstack([a, b, c])
        target = np.array(["A"] * 120 + ["B"] * 120 + ["C"] * 120)
        return RawDataset("chain", features, target, "multiclass")

    def test_chain_isolates_middle_class(self):
        raw = self._chain_dataset()
        side_a, side_b = confusion_partition(raw, seed=1)
        assert {frozenset(side_a), frozenset(side_b)} == {
            frozenset({"A", "C"}),
            frozenset({"B"}),
        }

    def test_partition_matches_bruteforce_max_cut(self):
        raw = self._chain_dataset(seed=7)
        graph = build_confusion_graph(raw, seed=1)
        w = graph.weights
        # brute force over the three bipartitions of {A, B, C}
        cuts = {
            frozenset({"A"}): w[0, 1] + w[0, 2],
            frozenset({"B"}): w[0, 1] + w[1, 2],
            frozenset({"C"}): w[0, 2] + w[1, 2],
        }
        best_single = max(cuts, key=cuts.get)
        side_a, side_b = confusion_partition(raw, seed=1)
        small = min((side_a, side_b), key=len)
        assert frozenset(small) == best_single

    def test_two_class_passthrough(self):
        rng = np.random.default_rng(8)
        raw = RawDataset(
            "two",
            rng.normal(size=(40, 2)),
            np.array(["x"] * 20 + ["y"] * 20),
            "multiclass",
        )
        assert confusion_partition(raw, seed=0) == ({"x"}, {"y"})

    def test_star_graph_two_coloring(self):
        # hub confused with every spoke, spokes not confused with each other
        classes = ("hub", "s1", "s2", "s3")
        weights = np.zeros((4, 4))
        for i in range(1, 4):
            weights[0, i] = weights[i, 0] = 10.0 + i
        graph = ConfusionGraph(classes=classes, weights=weights)
        side_a, side_b = two_color_tree(graph)
        assert {frozenset(side_a), frozenset(side_b)} == {
            frozenset({"hub"}),
            frozenset({"s1", "s2", "s3"}),
        }

    def test_partition_is_disjoint_covering_nonempty(self):
        raw = self._chain_dataset(seed=9)
        side_a, side_b = confusion_partition(raw, seed=2)
        assert side_a and side_b
        assert side_a.isdisjoint(side_b)
        assert side_a | side_b == {"A", "B", "C"}

    def test_tiny_class_rejected(self):
        rng = np.random.default_rng(10)
        features = rng.normal(size=(43, 2))
        target = np.array(["a"] * 20 + ["b"] * 20 + ["c"] * 3)
        raw = RawDataset("tiny", features, target, "multiclass")
        with pytest.raises(ValueError, match="minimum leaf"):
            confusion_partition(raw, seed=0)

    def test_deterministic_given_seed(self):
        raw = self._chain_dataset(seed=11)
        assert confusion_partition(raw, seed=3) == confusion_partition(raw, seed=3)


class TestSyntheticMotherset:
    def test_shape_and_class_counts(self):
        mset = generate_synthetic(seed=0)
        assert mset.features.shape == (20_000, 10)
        assert mset.is_anomaly.sum() == 10_000
        assert mset.origin == "synthetic"

    def test_anomalies_inside_cube(self):
        mset = generate_synthetic(seed=1)
        anom = mset.features[mset.is_anomaly]
        assert anom.min() > -4.0 and anom.max() < 4.0

    def test_deterministic(self):
        a = generate_synthetic(seed=5)
        b = generate_synthetic(seed=5)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.is_anomaly, b.is_anomaly)

    def test_normalized(self):
        mset = generate_synthetic(seed=2)
        assert np.abs(mset.features.mean(axis=0)).max() < 1e-9
        assert np.abs(mset.features.var(axis=0, ddof=1) - 1).max() < 1e-6


class TestMothersetFiles:
    def test_roundtrip(self, tmp_path, two_blob_motherset):
        manifest = write_motherset_files(two_blob_motherset, tmp_path)
        assert manifest["n_points"] == two_blob_motherset.features.shape[0]
        back = read_motherset_files(tmp_path)
        assert np.array_equal(back.features, two_blob_motherset.features)
        assert np.array_equal(back.is_anomaly, two_blob_motherset.is_anomaly)
        assert back.origin == two_blob_motherset.origin
