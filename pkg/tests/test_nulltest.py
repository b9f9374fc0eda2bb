import math

import numpy as np
import pytest

from anobench.metrics import auc, average_precision
from anobench.nulltest import (
    NullCache,
    NullQuantiles,
    auc_null_distribution,
    benchmark_failure,
    either_failure,
    null_quantiles,
    null_quantiles_pair,
    test_result,
)

from oracles import critical_value_from_values, null_distribution_enumeration

ALPHAS = (0.05, 0.01, 0.001)


class TestExactMode:
    def test_one_nine_auc_uniform_and_unrejectable(self):
        nq = null_quantiles(1, 9, "auc", mode="exact")
        # support is {0, 1/9, ..., 1}, each with probability 1/10, so no value
        # has a strictly-greater tail of mass <= 0.05 except the maximum
        assert nq.quantiles[0.05] == pytest.approx(1.0)
        for value in np.linspace(0, 1, 10):
            assert not test_result(value, nq, 0.05)

    def test_exact_matches_enumeration_oracle(self):
        for n_a, n_n in [(1, 9), (2, 6), (3, 5), (5, 5)]:
            for metric in ("auc", "ap"):
                nq = null_quantiles(n_a, n_n, metric, mode="exact")
                vals = null_distribution_enumeration(n_a, n_n, metric)
                for alpha in ALPHAS:
                    assert nq.quantiles[alpha] == pytest.approx(
                        critical_value_from_values(vals, alpha), abs=1e-12
                    ), (n_a, n_n, metric, alpha)

    def test_auc_null_mean_half(self):
        for n_a, n_n in [(1, 9), (3, 7), (5, 5)]:
            vals = null_distribution_enumeration(n_a, n_n, "auc")
            assert vals.mean() == pytest.approx(0.5, abs=1e-12)

    def test_fewer_anomalies_coarser_tail(self):
        # for fixed n, lower anomaly counts give equal-or-larger AUC criticals
        n = 12
        for alpha in ALPHAS:
            crits = [
                null_quantiles(n_a, n - n_a, "auc", mode="exact").quantiles[alpha]
                for n_a in (1, 2, 3, 4, 6)
            ]
            assert all(a >= b - 1e-12 for a, b in zip(crits, crits[1:]))

    def test_critical_values_monotone_in_alpha(self):
        nq = null_quantiles(4, 8, "ap", mode="exact")
        assert nq.quantiles[0.001] >= nq.quantiles[0.01] >= nq.quantiles[0.05]


class TestDpDistribution:
    def test_dp_matches_enumeration(self):
        for n_a, n_n in [(2, 6), (3, 5), (4, 4), (5, 7)]:
            values, probs = auc_null_distribution(n_a, n_n)
            enum = null_distribution_enumeration(n_a, n_n, "auc")
            uniq, counts = np.unique(np.round(enum, 12), return_counts=True)
            assert np.allclose(np.sort(values), np.sort(uniq))
            order = np.argsort(values)
            assert np.allclose(probs[order], counts / counts.sum(), atol=1e-12)

    def test_dp_mean_half_large_shape(self):
        values, probs = auc_null_distribution(30, 470)
        assert float(values @ probs) == pytest.approx(0.5, abs=1e-9)

    def test_exact_mode_beyond_enumeration_uses_dp(self):
        nq = null_quantiles(10, 90, "auc", mode="exact")
        assert nq.mode == "exact"
        mc = null_quantiles(10, 90, "auc", mode="mc", samples=200_000, seed=5)
        for alpha in ALPHAS:
            assert abs(nq.quantiles[alpha] - mc.quantiles[alpha]) < 0.02

    def test_exact_ap_beyond_enumeration_raises(self):
        with pytest.raises(ValueError, match="exact AP"):
            null_quantiles(10, 90, "ap", mode="exact")


class TestMonteCarlo:
    def test_exact_vs_mc_five_five(self):
        exact_auc, exact_ap = null_quantiles_pair(5, 5, mode="exact")
        mc_auc, mc_ap = null_quantiles_pair(5, 5, mode="mc", samples=1_000_000, seed=1)
        for alpha in ALPHAS:
            assert abs(exact_auc.quantiles[alpha] - mc_auc.quantiles[alpha]) <= 0.02
            assert abs(exact_ap.quantiles[alpha] - mc_ap.quantiles[alpha]) <= 0.02

    def test_mc_deterministic_given_seed(self):
        a = null_quantiles(7, 93, "ap", mode="mc", samples=50_000, seed=42)
        b = null_quantiles(7, 93, "ap", mode="mc", samples=50_000, seed=42)
        assert a.quantiles == b.quantiles

    def test_auto_mode_switches(self):
        small = null_quantiles(2, 10, "auc", mode="auto")
        assert small.mode == "exact"
        big = null_quantiles(50, 500, "auc", mode="auto", samples=10_000, seed=0)
        assert big.mode == "mc"


class TestVerdicts:
    def test_reject_above_critical(self):
        nq = NullQuantiles(2, 8, "auc", "exact", None, {0.05: 0.6})
        assert test_result(0.75, nq, 0.05)

    def test_boundary_fails(self):
        nq = NullQuantiles(2, 8, "auc", "exact", None, {0.05: 0.6})
        assert not test_result(0.6, nq, 0.05)

    def test_unknown_alpha(self):
        nq = NullQuantiles(2, 8, "auc", "exact", None, {0.05: 0.6})
        with pytest.raises(ValueError):
            test_result(0.7, nq, 0.2)

    def test_benchmark_failure_semantics(self):
        seven_fail_one_reject = {f"d{i}": False for i in range(7)} | {"d7": True}
        assert not benchmark_failure(seven_fail_one_reject)
        all_fail = {f"d{i}": False for i in range(8)}
        assert benchmark_failure(all_fail)
        with pytest.raises(ValueError):
            benchmark_failure({})

    def test_either_column_semantics(self):
        # all fail on AP while one rejects on AUC
        auc_rejects = {"a": True, "b": False}
        ap_rejects = {"a": False, "b": False}
        assert not benchmark_failure(auc_rejects)
        assert benchmark_failure(ap_rejects)
        assert either_failure(auc_rejects, ap_rejects)


class TestCalibration:
    @pytest.mark.parametrize("n_a,n_n", [(2, 18), (3, 9)])
    def test_size_under_exact_nulls(self, n_a, n_n):
        nq_auc, nq_ap = null_quantiles_pair(n_a, n_n, mode="exact")
        rng = np.random.default_rng(2024)
        n = n_a + n_n
        labels = np.zeros(n, dtype=bool)
        labels[:n_a] = True
        trials = 10_000
        rejections = {("auc", a): 0 for a in ALPHAS} | {("ap", a): 0 for a in ALPHAS}
        for _ in range(trials):
            scores = rng.random(n)
            perm = rng.permutation(n)
            a_v = auc(scores, labels)
            p_v = average_precision(scores, labels, tie_break=perm)
            for alpha in ALPHAS:
                rejections[("auc", alpha)] += test_result(a_v, nq_auc, alpha)
                rejections[("ap", alpha)] += test_result(p_v, nq_ap, alpha)
        for (metric, alpha), count in rejections.items():
            bound = alpha + 3 * math.sqrt(alpha / trials)
            assert count / trials <= bound, (metric, alpha, count / trials)


class TestCache:
    def test_roundtrip_and_reuse(self, tmp_path):
        cache = NullCache(tmp_path)
        a1, p1 = cache.get_pair(3, 9, seed=1)
        files = sorted(f.name for f in tmp_path.iterdir())
        a2, p2 = cache.get_pair(3, 9, seed=1)
        assert a1.quantiles == a2.quantiles
        assert p1.quantiles == p2.quantiles
        assert sorted(f.name for f in tmp_path.iterdir()) == files

    def test_json_roundtrip(self):
        nq = null_quantiles(2, 8, "ap", mode="exact")
        back = NullQuantiles.from_json(nq.to_json())
        assert back == nq
