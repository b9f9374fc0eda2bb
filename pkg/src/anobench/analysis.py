"""Corpus-level summaries: failure-rate tables, mean performance, contrasts
against control groups, and fixed-effects linear models with an R-squared
ablation.

Input is the evaluation table (one row per benchmark x detector).  Following
the methodology, results from failed benchmarks are excluded per metric --
the AUC and AP summaries therefore draw from slightly different pools --
while individual detector failures on surviving benchmarks are retained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from .metrics import logit

Z_999 = float(norm.ppf(0.9995))  # two-sided 0.999 interval

FACTOR_COLUMNS = {
    "mset": "motherset",
    "origin": "origin",
    "pd": "pd_level",
    "rf": "rf_level",
    "nc": "nc_level",
    "fi": "fi_level",
}

RESPONSE_METRIC = {"logit_auc": "auc", "log_lift": "ap"}

PROBLEM_DIMENSIONS = ("logit_rf", "logit_pd", "nc", "log_ir")


def alpha_tag(alpha: float) -> str:
    return f"{alpha:g}"


def failed_col(metric: str, alpha: float) -> str:
    return f"benchmark_failed_{metric}_{alpha_tag(alpha)}"


def reject_col(metric: str, alpha: float) -> str:
    return f"reject_{metric}_{alpha_tag(alpha)}"


def benchmark_table(records: pd.DataFrame) -> pd.DataFrame:
    """One row per benchmark (benchmark-level columns only)."""
    return records.drop_duplicates(subset="benchmark_id")


def failure_rates(
    records: pd.DataFrame, factor: str, alpha: float = 0.001
) -> pd.DataFrame:
    """Benchmark failure rates under AUC, AP, and Either, by factor level.

    Includes a global row; groups failing more often than the global rate are
    flagged per metric.
    """
    column = FACTOR_COLUMNS.get(factor, factor)
    bench = benchmark_table(records)
    if column not in bench.columns:
        raise ValueError(f"unknown grouping factor {factor!r}")
    cols = {
        "auc": failed_col("auc", alpha),
        "ap": failed_col("ap", alpha),
        "either": failed_col("either", alpha),
    }
    rows = []
    for level, grp in bench.groupby(column, sort=True):
        if grp.empty:
            raise ValueError(f"empty group {level!r}")
        rows.append(
            {
                factor: str(level),
                "n_benchmarks": len(grp),
                **{m: float(grp[c].mean()) for m, c in cols.items()},
            }
        )
    global_row = {
        factor: "(all)",
        "n_benchmarks": len(bench),
        **{m: float(bench[c].mean()) for m, c in cols.items()},
    }
    table = pd.DataFrame(rows + [global_row])
    for m in cols:
        table[f"above_global_{m}"] = table[m] > global_row[m]
        table.loc[table[factor] == "(all)", f"above_global_{m}"] = False
    return table


def mean_performance(
    records: pd.DataFrame,
    alpha: float = 0.001,
    mask: pd.Series | None = None,
) -> pd.DataFrame:
    """Mean transformed metrics per detector over surviving benchmarks.

    ``mask`` restricts the rows first (conditional variants: fi-0 only,
    nc > 0.25 only, ...) without changing the exclusion rules.
    """
    df = records if mask is None else records[mask.reindex(records.index, fill_value=False)]
    rows = []
    auc_pool = df[~df[failed_col("auc", alpha)]]
    ap_pool = df[~df[failed_col("ap", alpha)]]
    for detector in sorted(df["detector"].unique()):
        row: dict[str, object] = {"detector": detector}
        sub_auc = auc_pool[auc_pool["detector"] == detector]
        sub_ap = ap_pool[ap_pool["detector"] == detector]
        row["mean_logit_auc"] = float(sub_auc["logit_auc"].mean()) if len(sub_auc) else float("nan")
        row["mean_log_lift"] = float(sub_ap["log_lift"].mean()) if len(sub_ap) else float("nan")
        row["n_auc"] = len(sub_auc)
        row["n_ap"] = len(sub_ap)
        if "trivial_log_ratio_auc" in df.columns:
            vals = sub_auc["trivial_log_ratio_auc"].dropna()
            row["mean_trivial_log_ratio_auc"] = float(vals.mean()) if len(vals) else float("nan")
        if "trivial_log_ratio_ap" in df.columns:
            vals = sub_ap["trivial_log_ratio_ap"].dropna()
            row["mean_trivial_log_ratio_ap"] = float(vals.mean()) if len(vals) else float("nan")
        rows.append(row)
    return pd.DataFrame(rows)


def best_per_benchmark(
    records: pd.DataFrame, response: str, alpha: float = 0.001
) -> pd.DataFrame:
    """Best detector value of ``response`` on each surviving benchmark."""
    metric = RESPONSE_METRIC[response]
    pool = records[~records[failed_col(metric, alpha)]]
    best = pool.groupby("benchmark_id")[response].max().rename("best")
    bench = benchmark_table(pool).set_index("benchmark_id")
    return bench.join(best)


def control_contrast(
    records: pd.DataFrame,
    factor: str,
    level: str,
    control_level: str,
    response: str = "logit_auc",
    alpha: float = 0.001,
) -> tuple[float, tuple[float, float]]:
    """Difference of best-per-benchmark means (level minus control) with a
    two-sided normal-approximation 0.999 confidence interval."""
    column = FACTOR_COLUMNS.get(factor, factor)
    table = best_per_benchmark(records, response, alpha)
    grp_l = table.loc[table[column] == level, "best"].to_numpy(dtype=float)
    grp_c = table.loc[table[column] == control_level, "best"].to_numpy(dtype=float)
    if grp_c.size < 2:
        raise ValueError(f"control group {control_level!r} has fewer than 2 benchmarks")
    if grp_l.size < 2:
        raise ValueError(f"group {level!r} has fewer than 2 benchmarks")
    diff = float(grp_l.mean() - grp_c.mean())
    se = float(np.sqrt(grp_l.var(ddof=1) / grp_l.size + grp_c.var(ddof=1) / grp_c.size))
    return diff, (diff - Z_999 * se, diff + Z_999 * se)


def build_factor_frame(
    records: pd.DataFrame, metric: str, alpha: float = 0.001
) -> pd.DataFrame:
    """Modeling frame for one metric: failed benchmarks excluded, problem
    dimensions added as clipped real transforms.

    Rows whose clusteredness is undefined (a class with fewer than two
    points) are dropped; the transforms must be finite.
    """
    df = records[~records[failed_col(metric, alpha)]].copy()
    df["logit_rf"] = df["anomaly_fraction"].map(logit)
    df["logit_pd"] = df["mean_difficulty"].map(logit)
    df["nc"] = df["clusteredness"]
    df["log_ir"] = np.log(np.maximum(df["distance_ratio"], 1.0))
    df = df[np.isfinite(df["nc"])]
    return df


@dataclass
class OLSResult:
    coefficients: dict[str, float]
    r_squared: float
    n_rows: int
    response: str


def _design_matrix(
    frame: pd.DataFrame, regressors: list[str]
) -> tuple[np.ndarray, list[str]]:
    columns: list[np.ndarray] = [np.ones(len(frame))]
    names = ["(intercept)"]
    for reg in regressors:
        col = frame[reg]
        if col.dtype.kind in "OUSb":  # discrete factor: dummies, first level dropped
            levels = sorted(col.unique())
            for level in levels[1:]:
                columns.append((col == level).to_numpy(dtype=float))
                names.append(f"{reg}[{level}]")
        else:
            columns.append(col.to_numpy(dtype=float))
            names.append(reg)
    return np.column_stack(columns), names


def ols_fit(
    frame: pd.DataFrame, response: str, regressors: list[str]
) -> OLSResult:
    """Least squares with dummy-encoded factors; plain (unadjusted) R-squared."""
    y = frame[response].to_numpy(dtype=float)
    design, names = _design_matrix(frame, regressors)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        from scipy.linalg import qr

        _, _, piv = qr(design, mode="economic", pivoting=True)
        aliased = [names[i] for i in piv[rank:]]
        raise ValueError(f"design matrix is rank deficient; aliased columns: {aliased}")
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return OLSResult(
        coefficients=dict(zip(names, coef.tolist())),
        r_squared=float(r2),
        n_rows=len(frame),
        response=response,
    )


BASE_REGRESSORS = ["logit_rf", "logit_pd", "nc", "log_ir", "motherset", "detector"]
DISCRETE_REGRESSORS = ["rf_level", "pd_level", "nc_level", "fi_level", "motherset", "detector"]


def ablation_r2(
    frame: pd.DataFrame,
    response: str,
    regressors: list[str] | None = None,
) -> pd.DataFrame:
    """R-squared loss when each variable (and the problem-dimension block)
    is removed from the full model."""
    regressors = list(regressors or BASE_REGRESSORS)
    full = ols_fit(frame, response, regressors)
    dims = [r for r in regressors if r in PROBLEM_DIMENSIONS]
    drops: list[tuple[str, list[str]]] = [("(full model)", regressors)]
    if "detector" in regressors:
        drops.append(("w/o algorithm", [r for r in regressors if r != "detector"]))
    if "motherset" in regressors:
        drops.append(("w/o motherset", [r for r in regressors if r != "motherset"]))
    if dims:
        drops.append(("w/o all problem dimensions", [r for r in regressors if r not in dims]))
        for dim in dims:
            drops.append((f"w/o {dim}", [r for r in regressors if r != dim]))
    rows = []
    for label, regs in drops:
        result = full if label == "(full model)" else ols_fit(frame, response, regs)
        rows.append(
            {
                "model": label,
                "r_squared": result.r_squared,
                "r_squared_loss": full.r_squared - result.r_squared,
            }
        )
    return pd.DataFrame(rows)


def render_frame(frame: pd.DataFrame, title: str | None = None) -> str:
    """Aligned plain-text rendering of a summary table."""
    body = frame.to_string(index=False, float_format=lambda v: f"{v:.4f}")
    if title:
        rule = "-" * len(title)
        return f"{title}\n{rule}\n{body}\n"
    return body + "\n"
