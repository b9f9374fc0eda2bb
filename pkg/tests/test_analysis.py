import numpy as np
import pandas as pd
import pytest

from anobench.analysis import (
    ablation_r2,
    best_per_benchmark,
    build_factor_frame,
    control_contrast,
    failure_rates,
    mean_performance,
    ols_fit,
)
from anobench.metrics import auc, average_precision, expected_ap, logit, transform


def fake_records(
    n_benchmarks=40,
    detectors=("alpha", "beta", "trivial"),
    seed=0,
    alpha=0.001,
    failed_fraction=0.2,
):
    """Synthetic evaluation table with the columns analysis consumes."""
    rng = np.random.default_rng(seed)
    rows = []
    levels = {
        "pd": ["pd-1", "pd-2"],
        "rf": ["rf-2", "rf-4"],
        "nc": ["nc-0", "nc-1", "nc-2"],
        "fi": ["fi-0", "fi-3"],
    }
    for b in range(n_benchmarks):
        failed = rng.random() < failed_fraction
        pd_l = levels["pd"][b % 2]
        rf_l = levels["rf"][(b // 2) % 2]
        nc_l = levels["nc"][b % 3]
        fi_l = levels["fi"][(b // 3) % 2]
        measured = {
            "mean_difficulty": rng.uniform(0.05, 0.45),
            "anomaly_fraction": rng.uniform(0.005, 0.1),
            "clusteredness": rng.normal(0, 1),
            "distance_ratio": 1.0 if fi_l == "fi-0" else 2.0,
        }
        for det in detectors:
            rows.append(
                {
                    "benchmark_id": f"m__{b:03d}",
                    "motherset": "m" if b % 2 else "s",
                    "origin": "binary" if b % 2 else "synthetic",
                    "pd_level": pd_l,
                    "rf_level": rf_l,
                    "nc_level": nc_l,
                    "fi_level": fi_l,
                    "replicate": 1,
                    **measured,
                    "detector": det,
                    "logit_auc": rng.normal(0.8, 0.5),
                    "log_lift": rng.normal(0.7, 0.5),
                    "trivial_log_ratio_auc": rng.normal(0.1, 0.2),
                    "trivial_log_ratio_ap": rng.normal(0.1, 0.2),
                    f"benchmark_failed_auc_{alpha:g}": failed,
                    f"benchmark_failed_ap_{alpha:g}": failed,
                    f"benchmark_failed_either_{alpha:g}": failed,
                }
            )
    return pd.DataFrame(rows)


class TestFailureRates:
    def test_no_failures_all_zero(self):
        df = fake_records(failed_fraction=0.0)
        table = failure_rates(df, "pd", 0.001)
        assert (table["auc"] == 0).all()
        assert (table["either"] == 0).all()

    def test_single_group_equals_global(self):
        df = fake_records()
        df["fi_level"] = "fi-0"
        table = failure_rates(df, "fi", 0.001)
        assert len(table) == 2  # one level plus the global row
        assert table.iloc[0]["auc"] == pytest.approx(table.iloc[1]["auc"])

    def test_global_is_weighted_mean_of_groups(self):
        df = fake_records(seed=3)
        table = failure_rates(df, "nc", 0.001)
        groups = table[table["nc"] != "(all)"]
        weighted = (groups["auc"] * groups["n_benchmarks"]).sum() / groups[
            "n_benchmarks"
        ].sum()
        global_rate = table.loc[table["nc"] == "(all)", "auc"].iloc[0]
        assert global_rate == pytest.approx(weighted)

    def test_flags_above_global(self):
        df = fake_records(seed=4)
        table = failure_rates(df, "pd", 0.001)
        global_rate = table.loc[table["pd"] == "(all)", "auc"].iloc[0]
        for _, row in table[table["pd"] != "(all)"].iterrows():
            assert row["above_global_auc"] == (row["auc"] > global_rate)


class TestMeanPerformance:
    def test_random_detector_means_near_zero(self):
        # a detector emitting random scores has near-zero transformed metrics
        rng = np.random.default_rng(5)
        n_a, n_n = 50, 950
        labels = np.zeros(n_a + n_n, dtype=bool)
        labels[:n_a] = True
        rows = []
        for b in range(250):
            scores = rng.random(n_a + n_n)
            rec = transform(
                auc(scores, labels),
                average_precision(scores, labels, tie_break=rng.permutation(1000)),
                n_a,
                n_n,
            )
            rows.append(
                {
                    "benchmark_id": f"b{b}",
                    "detector": "rand",
                    "logit_auc": rec.logit_auc,
                    "log_lift": rec.log_lift,
                    "benchmark_failed_auc_0.001": False,
                    "benchmark_failed_ap_0.001": False,
                }
            )
        table = mean_performance(pd.DataFrame(rows), 0.001)
        assert abs(table.iloc[0]["mean_logit_auc"]) < 0.1
        assert abs(table.iloc[0]["mean_log_lift"]) < 0.1

    def test_failed_benchmarks_excluded(self):
        df = fake_records(seed=6, failed_fraction=0.5)
        table = mean_performance(df, 0.001)
        surviving = df[~df["benchmark_failed_auc_0.001"]]
        expect = surviving[surviving["detector"] == "alpha"]["logit_auc"].mean()
        got = table.loc[table["detector"] == "alpha", "mean_logit_auc"].iloc[0]
        assert got == pytest.approx(expect)

    def test_mask_recomputes_on_subset(self):
        df = fake_records(seed=7)
        mask = df["clusteredness"] > 0.25
        table = mean_performance(df, 0.001, mask=mask)
        assert set(table["detector"]) == set(df[mask]["detector"])
        sub = df[mask]
        sub = sub[~sub["benchmark_failed_auc_0.001"]]
        expect = sub[sub["detector"] == "beta"]["logit_auc"].mean()
        got = table.loc[table["detector"] == "beta", "mean_logit_auc"].iloc[0]
        assert got == pytest.approx(expect)

    def test_trivial_ratio_columns_included(self):
        table = mean_performance(fake_records(seed=8), 0.001)
        assert "mean_trivial_log_ratio_auc" in table.columns


class TestControlContrast:
    def test_identical_groups_ci_contains_zero(self):
        df = fake_records(seed=9, n_benchmarks=60, failed_fraction=0.0)
        # duplicate the control rows under another level name: same data
        control_rows = df[df["nc_level"] == "nc-0"].copy()
        other = control_rows.copy()
        other["nc_level"] = "nc-1"
        other["benchmark_id"] = other["benchmark_id"] + "x"
        stacked = pd.concat([control_rows, other], ignore_index=True)
        diff, (lo, hi) = control_contrast(stacked, "nc", "nc-1", "nc-0")
        assert lo <= 0 <= hi
        assert diff == pytest.approx(0.0, abs=1e-12)

    def test_missing_control_errors(self):
        df = fake_records(seed=10)
        df = df[df["nc_level"] != "nc-0"]
        with pytest.raises(ValueError, match="control"):
            control_contrast(df, "nc", "nc-1", "nc-0")

    def test_best_per_benchmark_takes_max(self):
        df = fake_records(seed=11, failed_fraction=0.0)
        table = best_per_benchmark(df, "logit_auc", 0.001)
        bid = df["benchmark_id"].iloc[0]
        assert table.loc[bid, "best"] == pytest.approx(
            df[df["benchmark_id"] == bid]["logit_auc"].max()
        )


class TestOls:
    def test_two_regressor_closed_form(self):
        rng = np.random.default_rng(12)
        n = 200
        x1 = rng.normal(size=n)
        x2 = rng.normal(size=n)
        y = 1.5 + 2.0 * x1 - 3.0 * x2 + rng.normal(0, 0.1, n)
        frame = pd.DataFrame({"x1": x1, "x2": x2, "y": y})
        result = ols_fit(frame, "y", ["x1", "x2"])
        design = np.column_stack([np.ones(n), x1, x2])
        beta = np.linalg.solve(design.T @ design, design.T @ y)
        assert result.coefficients["(intercept)"] == pytest.approx(beta[0], abs=1e-10)
        assert result.coefficients["x1"] == pytest.approx(beta[1], abs=1e-10)
        assert result.coefficients["x2"] == pytest.approx(beta[2], abs=1e-10)

    def test_exact_linear_r2_one(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=50)
        frame = pd.DataFrame({"x": x, "y": 3 * x - 2})
        assert ols_fit(frame, "y", ["x"]).r_squared == pytest.approx(1.0, abs=1e-9)

    def test_independent_response_r2_near_zero(self):
        rng = np.random.default_rng(14)
        n = 10_000
        frame = pd.DataFrame(
            {
                "x1": rng.normal(size=n),
                "x2": rng.normal(size=n),
                "g": rng.choice(["a", "b", "c"], n),
                "y": rng.normal(size=n),
            }
        )
        assert ols_fit(frame, "y", ["x1", "x2", "g"]).r_squared < 0.02

    def test_dummy_encoding_of_factors(self):
        frame = pd.DataFrame(
            {
                "g": ["a", "a", "b", "b", "c", "c"],
                "y": [0.0, 0.0, 1.0, 1.0, 5.0, 5.0],
            }
        )
        result = ols_fit(frame, "y", ["g"])
        assert result.coefficients["g[b]"] == pytest.approx(1.0)
        assert result.coefficients["g[c]"] == pytest.approx(5.0)
        assert result.r_squared == pytest.approx(1.0)

    def test_rank_deficiency_reports_aliased(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=30)
        frame = pd.DataFrame({"x1": x, "x2": 2 * x, "y": rng.normal(size=30)})
        with pytest.raises(ValueError, match="aliased"):
            ols_fit(frame, "y", ["x1", "x2"])


class TestAblation:
    def _frame(self, seed=16, n=2000):
        rng = np.random.default_rng(seed)
        frame = pd.DataFrame(
            {
                "logit_rf": rng.normal(size=n),
                "logit_pd": rng.normal(size=n),
                "nc": rng.normal(size=n),
                "log_ir": rng.normal(size=n),
                "motherset": rng.choice(["m1", "m2"], n),
                "detector": rng.choice(["d1", "d2", "d3"], n),
            }
        )
        frame["y"] = (
            -0.5 * frame["logit_rf"]
            - 0.3 * frame["logit_pd"]
            + (frame["motherset"] == "m2") * 1.0
            + rng.normal(0, 0.5, n)
        )
        return frame

    def test_nestedness(self):
        table = ablation_r2(self._frame(), "y")
        full = table.loc[table["model"] == "(full model)", "r_squared"].iloc[0]
        assert (table["r_squared"] <= full + 1e-12).all()
        assert (table["r_squared_loss"] >= -1e-12).all()

    def test_zero_coefficient_variable_costs_nothing(self):
        table = ablation_r2(self._frame(), "y")
        loss = table.loc[table["model"] == "w/o nc", "r_squared_loss"].iloc[0]
        assert loss == pytest.approx(0.0, abs=5e-3)

    def test_informative_variable_costs_more_than_noise(self):
        table = ablation_r2(self._frame(), "y")
        rf_loss = table.loc[table["model"] == "w/o logit_rf", "r_squared_loss"].iloc[0]
        nc_loss = table.loc[table["model"] == "w/o nc", "r_squared_loss"].iloc[0]
        assert rf_loss > nc_loss


class TestFactorFrame:
    def test_transforms_finite_and_failed_excluded(self):
        df = fake_records(seed=17, failed_fraction=0.3)
        frame = build_factor_frame(df, "auc", 0.001)
        assert not frame["benchmark_failed_auc_0.001"].any()
        for col in ("logit_rf", "logit_pd", "nc", "log_ir"):
            assert np.isfinite(frame[col]).all()

    def test_transform_values(self):
        df = fake_records(seed=18, failed_fraction=0.0)
        frame = build_factor_frame(df, "auc", 0.001)
        row = frame.iloc[0]
        assert row["logit_rf"] == pytest.approx(logit(row["anomaly_fraction"]))
        assert row["log_ir"] == pytest.approx(np.log(max(row["distance_ratio"], 1.0)))
