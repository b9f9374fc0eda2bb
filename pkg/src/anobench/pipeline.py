"""End-to-end pipeline: generate -> run -> evaluate -> report.

Every stage is manifest-driven, resumable (existing artifacts are skipped),
and deterministic: seeds derive from (master seed, stage, coordinates), all
files are written atomically, and table rows are sorted, so two runs of the
same manifest produce byte-identical benchmark files and evaluation tables
regardless of worker scheduling.  Per-cell detector failures are isolated
into error records rather than aborting the corpus.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import artifacts as art
from .analysis import (
    BASE_REGRESSORS,
    DISCRETE_REGRESSORS,
    FACTOR_COLUMNS,
    RESPONSE_METRIC,
    ablation_r2,
    alpha_tag,
    control_contrast,
    failure_rates,
    mean_performance,
    ols_fit,
    build_factor_frame,
    render_frame,
)
from .detectors import DetectorConfig, run_detector
from .difficulty import fit_difficulty_oracle, score_motherset
from .ingest import generate_synthetic, label_candidates, load_motherset
from .levels import FI_RATIOS
from .metrics import auc as auc_metric
from .metrics import average_precision, transform
from .nulltest import (
    DEFAULT_ALPHAS,
    DEFAULT_MC_SAMPLES,
    NullCache,
    benchmark_failure,
    test_result,
)
from .sampler import (
    GLOBAL_SIZE_CAP,
    BenchmarkSpec,
    InfeasibleSpecError,
    augment_irrelevant,
    enumerate_specs,
    sample_benchmark,
)
from .seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_DETECTORS = ("trivial", "iforest", "lof", "abod", "loda", "egmm", "rkde")
# the trivial baseline normalizes scores but does not count as an algorithm
# when deciding benchmark failure
BASELINE_DETECTOR = "trivial"


@dataclass
class RunManifest:
    master_seed: int = 0
    output_root: str = "anobench-out"
    mothersets: list[dict] = field(default_factory=list)
    levels: dict[str, list[str]] = field(default_factory=dict)
    replicates: int = 5
    detectors: list[dict] = field(
        default_factory=lambda: [{"name": n, "parameters": {}} for n in DEFAULT_DETECTORS]
    )
    alphas: list[float] = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    workers: int = 1
    size_cap: int = GLOBAL_SIZE_CAP
    mc_samples: int = DEFAULT_MC_SAMPLES

    def detector_configs(self) -> list[DetectorConfig]:
        return [
            DetectorConfig(name=d["name"], parameters=d.get("parameters", {}))
            for d in self.detectors
        ]

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "output_root": self.output_root,
            "mothersets": self.mothersets,
            "levels": self.levels,
            "replicates": self.replicates,
            "detectors": self.detectors,
            "alphas": self.alphas,
            "workers": self.workers,
            "size_cap": self.size_cap,
            "mc_samples": self.mc_samples,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunManifest":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in payload.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls.from_dict(art.read_json(path))

    def save(self, path: str | Path) -> None:
        art.write_json(path, self.to_dict())


class Layout:
    """Canonical paths under one output root."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def motherset_dir(self, name: str) -> Path:
        return self.root / "mothersets" / name

    def benchmarks_root(self, mset: str) -> Path:
        return self.root / "benchmarks" / mset

    def benchmark_dir(self, mset: str, spec_id: str) -> Path:
        return self.benchmarks_root(mset) / spec_id

    def failed_spec_path(self, mset: str, spec_id: str) -> Path:
        return self.benchmarks_root(mset) / "failed" / f"{spec_id}.json"

    def score_dir(self, mset: str, spec_id: str) -> Path:
        return self.root / "scores" / mset / spec_id

    def nullcache_dir(self) -> Path:
        return self.root / "nullcache"

    def evaluation_path(self) -> Path:
        return self.root / "evaluation.csv"

    def report_dir(self) -> Path:
        return self.root / "report"

    def iter_benchmark_dirs(self) -> list[tuple[str, str, Path]]:
        out = []
        base = self.root / "benchmarks"
        if not base.exists():
            return out
        for mset_dir in sorted(base.iterdir()):
            if not mset_dir.is_dir():
                continue
            for bench_dir in sorted(mset_dir.iterdir()):
                if bench_dir.name == "failed" or not bench_dir.is_dir():
                    continue
                if (bench_dir / "manifest.json").exists():
                    out.append((mset_dir.name, bench_dir.name, bench_dir))
        return out


# ------------------------------------------------------------------ generate


def _prepare_motherset(layout: Layout, config: dict, master_seed: int) -> dict:
    name = config["name"]
    mdir = layout.motherset_dir(name)
    manifest_path = mdir / "manifest.json"
    seed = derive_seed(master_seed, "motherset", name)
    if manifest_path.exists():
        manifest = art.read_json(manifest_path)
    else:
        if config.get("synthetic"):
            mset = generate_synthetic(seed)
            mset.name = name
        else:
            raw = load_motherset(
                config["path"], config["target_column"], config["task_kind"]
            )
            raw.name = name
            mset = label_candidates(raw, seed=seed)
        manifest = art.write_motherset_files(mset, mdir)
    if not (mdir / "difficulty.csv").exists():
        mset = art.read_motherset_files(mdir)
        oracle = fit_difficulty_oracle(mset, seed=derive_seed(master_seed, "difficulty", name))
        scores = score_motherset(oracle, mset)
        art.write_difficulty_files(
            mdir,
            scores,
            {
                "motherset": name,
                "bandwidth": oracle.bandwidth,
                "regularization": oracle.regularization,
                "converged": oracle.converged,
                "cv_losses": oracle.cv_losses,
            },
        )
    return manifest


def _generate_chunk(args: tuple) -> tuple[int, int]:
    """Worker: materialize a chunk of specs for one motherset."""
    root, mset_name, spec_dicts, size_cap = args
    layout = Layout(root)
    mdir = layout.motherset_dir(mset_name)
    mset = art.read_motherset_files(mdir)
    difficulty = art.read_difficulty_files(mdir)
    made = failed = 0
    for sd in spec_dicts:
        spec = BenchmarkSpec(**sd)
        bdir = layout.benchmark_dir(mset_name, spec.spec_id)
        if (bdir / "manifest.json").exists():
            continue
        fail_path = layout.failed_spec_path(mset_name, spec.spec_id)
        if fail_path.exists():
            continue
        try:
            bench = sample_benchmark(mset, difficulty, spec, size_cap=size_cap)
            bench = augment_irrelevant(
                bench, FI_RATIOS[spec.fi_level], mset, spec.seed
            )
        except InfeasibleSpecError as exc:
            art.write_json(
                fail_path,
                {"benchmark_id": spec.benchmark_id, "spec": sd, "reason": str(exc)},
            )
            failed += 1
            continue
        art.write_benchmark_files(bench, bdir)
        made += 1
    return made, failed


def cmd_generate(manifest: RunManifest) -> dict:
    """Materialize mothersets, difficulty tables, and all feasible benchmarks."""
    if not manifest.mothersets:
        raise ValueError("manifest lists no mothersets (use --synthetic or add files)")
    layout = Layout(manifest.output_root)
    layout.root.mkdir(parents=True, exist_ok=True)
    manifest.save(layout.root / "manifest.json")

    for cfg in manifest.mothersets:
        _prepare_motherset(layout, cfg, manifest.master_seed)

    tasks = []
    for cfg in manifest.mothersets:
        name = cfg["name"]
        specs = enumerate_specs(
            name, manifest.levels, manifest.replicates, manifest.master_seed
        )
        spec_dicts = [
            {
                "motherset": s.motherset,
                "pd_level": s.pd_level,
                "rf_level": s.rf_level,
                "nc_level": s.nc_level,
                "fi_level": s.fi_level,
                "replicate": s.replicate,
                "seed": s.seed,
            }
            for s in specs
        ]
        chunk = max(1, len(spec_dicts) // max(manifest.workers * 4, 1))
        for i in range(0, len(spec_dicts), chunk):
            tasks.append(
                (str(layout.root), name, spec_dicts[i : i + chunk], manifest.size_cap)
            )

    made = failed = 0
    if manifest.workers > 1:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            for m, f in pool.map(_generate_chunk, tasks):
                made += m
                failed += f
    else:
        for task in tasks:
            m, f = _generate_chunk(task)
            made += m
            failed += f
    summary = {"benchmarks_written": made, "specs_infeasible": failed}
    logger.info("generate: %s", summary)
    return summary


# ----------------------------------------------------------------------- run


def _run_cell(args: tuple) -> tuple[str, str, str, str]:
    """Worker: score one (benchmark, detector) cell.

    Returns (mset, spec_id, detector, status) with status in
    {"ok", "skipped", "error"}.
    """
    root, mset_name, spec_id, det_dict, master_seed = args
    layout = Layout(root)
    sdir = layout.score_dir(mset_name, spec_id)
    name = det_dict["name"]
    if (sdir / f"{name}.csv").exists():
        return mset_name, spec_id, name, "skipped"
    features, _, point_ids, bench_manifest = art.read_benchmark_files(
        layout.benchmark_dir(mset_name, spec_id)
    )
    benchmark_id = bench_manifest["benchmark_id"]
    seed = derive_seed(master_seed, "detector", name, benchmark_id)
    config = DetectorConfig(
        name=name, parameters=det_dict.get("parameters", {}), seed=seed
    )
    start = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = run_detector(config, features)
        wall = time.perf_counter() - start
    except Exception as exc:  # isolate the cell, keep the corpus going
        art.write_json(
            sdir / f"{name}.error.json",
            {
                "benchmark_id": benchmark_id,
                "detector": name,
                "error": f"{type(exc).__name__}: {exc}",
            },
        )
        return mset_name, spec_id, name, "error"
    art.write_score_files(
        sdir,
        name,
        point_ids,
        result.scores,
        {
            "benchmark_id": benchmark_id,
            "detector": name,
            "parameters": {k: repr(v) for k, v in config.parameters.items()},
            "seed": seed,
            "wall_time_s": wall,
            "warnings": sorted({str(w.message) for w in caught}),
        },
    )
    stale = sdir / f"{name}.error.json"
    if stale.exists():
        stale.unlink()
    return mset_name, spec_id, name, "ok"


def cmd_run(manifest: RunManifest) -> dict:
    """Score every (benchmark, detector) pair; resumable, failures isolated."""
    layout = Layout(manifest.output_root)
    detector_dicts = [dict(d) for d in manifest.detectors]
    for d in detector_dicts:
        DetectorConfig(name=d["name"], parameters=d.get("parameters", {}))  # validate
    cells = []
    for mset_name, spec_id, _ in layout.iter_benchmark_dirs():
        for det in detector_dicts:
            cells.append(
                (str(layout.root), mset_name, spec_id, det, manifest.master_seed)
            )
    counts = {"ok": 0, "skipped": 0, "error": 0}
    errors: list[str] = []
    if manifest.workers > 1:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            results = pool.map(_run_cell, cells, chunksize=4)
            for mset_name, spec_id, det, status in results:
                counts[status] += 1
                if status == "error":
                    errors.append(f"{mset_name}/{spec_id}/{det}")
    else:
        for cell in cells:
            mset_name, spec_id, det, status = _run_cell(cell)
            counts[status] += 1
            if status == "error":
                errors.append(f"{mset_name}/{spec_id}/{det}")
    summary = {"cells": len(cells), **counts, "failed_cells": errors}
    logger.info("run: %s", {k: v for k, v in summary.items() if k != "failed_cells"})
    return summary


# ------------------------------------------------------------------ evaluate


EVAL_ID_COLUMNS = [
    "benchmark_id",
    "motherset",
    "origin",
    "pd_level",
    "rf_level",
    "nc_level",
    "fi_level",
    "replicate",
    "n_points",
    "n_anomalies",
    "n_normals",
    "mean_difficulty",
    "anomaly_fraction",
    "clusteredness",
    "distance_ratio",
    "detector",
    "seed",
    "tie_seed",
]
EVAL_METRIC_COLUMNS = [
    "auc",
    "ap",
    "expected_ap",
    "logit_auc",
    "log_lift",
    "trivial_log_ratio_auc",
    "trivial_log_ratio_ap",
]


def _bool_columns(alphas: list[float]) -> list[str]:
    cols = []
    for metric in ("auc", "ap"):
        for alpha in alphas:
            cols.append(f"reject_{metric}_{alpha_tag(alpha)}")
    for metric in ("auc", "ap", "either"):
        for alpha in alphas:
            cols.append(f"benchmark_failed_{metric}_{alpha_tag(alpha)}")
    return cols


def evaluation_columns(alphas: list[float]) -> list[str]:
    return EVAL_ID_COLUMNS + EVAL_METRIC_COLUMNS + _bool_columns(alphas)


def load_evaluation(path: str | Path) -> pd.DataFrame:
    """Read an evaluation table, restoring verdict/failure columns to bool."""
    df = pd.read_csv(path)
    for col in df.columns:
        if col.startswith("reject_") or col.startswith("benchmark_failed_"):
            df[col] = df[col].astype(bool)
    return df


def verify_artifact_hashes(layout: Layout) -> int:
    """Check every file hash recorded in benchmark manifests; returns the
    number of files checked, raising on any mismatch."""
    checked = 0
    for _, _, bdir in layout.iter_benchmark_dirs():
        manifest = art.read_json(bdir / "manifest.json")
        for name, recorded in manifest.get("files", {}).items():
            actual = art.sha256_file(bdir / name)
            if actual != recorded:
                raise ValueError(
                    f"artifact hash mismatch for {bdir / name}: "
                    f"recorded {recorded[:12]}, found {actual[:12]}"
                )
            checked += 1
    return checked


def cmd_evaluate(manifest: RunManifest) -> dict:
    """Metrics, transforms, null-test verdicts, and failure flags for every
    scored cell; writes the evaluation table."""
    layout = Layout(manifest.output_root)
    alphas = list(manifest.alphas)
    cache = NullCache(layout.nullcache_dir())
    origins = {}
    for cfg in manifest.mothersets:
        mdir = layout.motherset_dir(cfg["name"])
        if (mdir / "manifest.json").exists():
            origins[cfg["name"]] = art.read_json(mdir / "manifest.json")["origin"]

    rows: list[dict] = []
    missing: list[str] = []
    bench_dirs = layout.iter_benchmark_dirs()
    if not bench_dirs:
        raise ValueError("no benchmarks found; run generate first")
    verify_artifact_hashes(layout)
    for mset_name, spec_id, bdir in bench_dirs:
        _, labels, point_ids, bm = art.read_benchmark_files(bdir)
        n_a = int(bm["n_anomalies"])
        n_n = int(bm["n_normals"])
        sdir = layout.score_dir(mset_name, spec_id)
        per_detector: dict[str, np.ndarray] = {}
        for det in manifest.detectors:
            name = det["name"]
            path = sdir / f"{name}.csv"
            if not path.exists():
                missing.append(f"{mset_name}/{spec_id}/{name}")
                continue
            ids, scores = art.read_score_file(path)
            if scores.shape[0] != labels.shape[0]:
                raise ValueError(
                    f"score length mismatch for {mset_name}/{spec_id}/{name}"
                )
            if not np.array_equal(ids, point_ids):
                order = {pid: k for k, pid in enumerate(ids)}
                scores = scores[[order[pid] for pid in point_ids]]
            per_detector[name] = scores
        if not per_detector:
            continue

        null_seed = derive_seed(manifest.master_seed, "null", n_a, n_n)
        nq_auc, nq_ap = cache.get_pair(
            n_a, n_n, seed=null_seed, alphas=tuple(alphas), samples=manifest.mc_samples
        )

        trivial_auc = trivial_ap = None
        if BASELINE_DETECTOR in per_detector:
            t_scores = per_detector[BASELINE_DETECTOR]
            tie_seed = derive_seed(
                manifest.master_seed, "ap-ties", bm["benchmark_id"], BASELINE_DETECTOR
            )
            perm = np.random.default_rng(tie_seed).permutation(labels.size)
            trivial_auc = auc_metric(t_scores, labels)
            trivial_ap = average_precision(t_scores, labels, tie_break=perm)

        bench_rows: list[dict] = []
        for name in sorted(per_detector):
            scores = per_detector[name]
            tie_seed = derive_seed(
                manifest.master_seed, "ap-ties", bm["benchmark_id"], name
            )
            perm = np.random.default_rng(tie_seed).permutation(labels.size)
            auc_v = auc_metric(scores, labels)
            ap_v = average_precision(scores, labels, tie_break=perm)
            record = transform(auc_v, ap_v, n_a, n_n, trivial_auc, trivial_ap)
            row = {
                "benchmark_id": bm["benchmark_id"],
                "motherset": mset_name,
                "origin": origins.get(mset_name, ""),
                "pd_level": bm["levels"]["pd"],
                "rf_level": bm["levels"]["rf"],
                "nc_level": bm["levels"]["nc"],
                "fi_level": bm["levels"]["fi"],
                "replicate": bm["replicate"],
                "n_points": bm["n_points"],
                "n_anomalies": n_a,
                "n_normals": n_n,
                "mean_difficulty": bm["measured"]["mean_difficulty"],
                "anomaly_fraction": bm["measured"]["anomaly_fraction"],
                "clusteredness": bm["measured"]["clusteredness"],
                "distance_ratio": bm["measured"]["distance_ratio"],
                "detector": name,
                "seed": derive_seed(
                    manifest.master_seed, "detector", name, bm["benchmark_id"]
                ),
                "tie_seed": tie_seed,
                "auc": record.auc,
                "ap": record.ap,
                "expected_ap": record.expected_ap,
                "logit_auc": record.logit_auc,
                "log_lift": record.log_lift,
                "trivial_log_ratio_auc": record.trivial_log_ratio_auc,
                "trivial_log_ratio_ap": record.trivial_log_ratio_ap,
            }
            for alpha in alphas:
                row[f"reject_auc_{alpha_tag(alpha)}"] = int(
                    test_result(auc_v, nq_auc, alpha)
                )
                row[f"reject_ap_{alpha_tag(alpha)}"] = int(
                    test_result(ap_v, nq_ap, alpha)
                )
            bench_rows.append(row)

        # benchmark failure: all non-baseline detectors fail to reject
        algo_rows = [r for r in bench_rows if r["detector"] != BASELINE_DETECTOR]
        flag_rows = algo_rows if algo_rows else bench_rows
        for alpha in alphas:
            tag = alpha_tag(alpha)
            fail_auc = benchmark_failure(
                {r["detector"]: bool(r[f"reject_auc_{tag}"]) for r in flag_rows}
            )
            fail_ap = benchmark_failure(
                {r["detector"]: bool(r[f"reject_ap_{tag}"]) for r in flag_rows}
            )
            for r in bench_rows:
                r[f"benchmark_failed_auc_{tag}"] = int(fail_auc)
                r[f"benchmark_failed_ap_{tag}"] = int(fail_ap)
                r[f"benchmark_failed_either_{tag}"] = int(fail_auc or fail_ap)
        rows.extend(bench_rows)

    rows.sort(key=lambda r: (r["benchmark_id"], r["detector"]))
    columns = evaluation_columns(alphas)
    table_rows = [
        ["" if r.get(c) is None else r.get(c) for c in columns] for r in rows
    ]
    art.write_table(layout.evaluation_path(), columns, table_rows)
    summary = {
        "rows": len(rows),
        "benchmarks": len({r["benchmark_id"] for r in rows}),
        "missing_scores": missing,
    }
    logger.info("evaluate: rows=%d missing=%d", len(rows), len(missing))
    return summary


# -------------------------------------------------------------------- report


def _parse_filter(expr: str) -> tuple[str, str]:
    if "=" not in expr:
        raise ValueError(f"filter must look like dim=level, got {expr!r}")
    dim, level = expr.split("=", 1)
    column = FACTOR_COLUMNS.get(dim.strip(), dim.strip())
    return column, level.strip()


def cmd_report(
    manifest: RunManifest,
    alpha: float = 0.001,
    filters: list[str] | None = None,
) -> dict:
    """Summary tables plus a single concatenated report document."""
    layout = Layout(manifest.output_root)
    eval_path = layout.evaluation_path()
    if not eval_path.exists():
        raise ValueError("no evaluation table found; run evaluate first")
    records = load_evaluation(eval_path)
    if records.empty:
        raise ValueError("evaluation table is empty")
    rdir = layout.report_dir()
    rdir.mkdir(parents=True, exist_ok=True)
    sections: list[str] = []

    def emit(name: str, frame: pd.DataFrame, title: str) -> None:
        frame.to_csv(rdir / f"{name}.csv", index=False)
        sections.append(render_frame(frame, title))

    for factor in ("mset", "origin", "rf", "pd", "nc", "fi"):
        try:
            table = failure_rates(records, factor, alpha)
        except ValueError:
            continue
        emit(
            f"failure_rates_{factor}",
            table,
            f"Benchmark failure rate by {factor} (alpha={alpha:g})",
        )

    emit(
        "mean_performance",
        mean_performance(records, alpha),
        f"Mean performance by detector (alpha={alpha:g})",
    )
    conditionals = [
        ("fi_level", "fi-0", "no added irrelevant features"),
        ("fi_level", "fi-3", "many irrelevant features"),
    ]
    for column, level, label in conditionals:
        mask = records[column] == level
        if mask.any():
            emit(
                f"mean_performance_{level}",
                mean_performance(records, alpha, mask=mask),
                f"Mean performance, {label} ({level})",
            )
    clustered_mask = records["clusteredness"] > 0.25
    if clustered_mask.any():
        emit(
            "mean_performance_clustered",
            mean_performance(records, alpha, mask=clustered_mask),
            "Mean performance, clusteredness > 0.25",
        )
    for expr in filters or []:
        column, level = _parse_filter(expr)
        mask = records[column] == level
        if not mask.any():
            raise ValueError(f"filter {expr!r} matches no rows")
        emit(
            f"mean_performance_filter_{level}",
            mean_performance(records, alpha, mask=mask),
            f"Mean performance, {column}={level}",
        )

    contrast_rows = []
    for factor in ("rf", "pd", "nc", "fi"):
        column = FACTOR_COLUMNS[factor]
        control = f"{factor}-0"
        levels = sorted(set(records[column]) - {control})
        for level in levels:
            for response in ("logit_auc", "log_lift"):
                try:
                    diff, (lo, hi) = control_contrast(
                        records, factor, level, control, response, alpha
                    )
                except (ValueError, KeyError):
                    continue
                contrast_rows.append(
                    {
                        "factor": factor,
                        "level": level,
                        "control": control,
                        "response": response,
                        "mean_difference": diff,
                        "ci_low": lo,
                        "ci_high": hi,
                    }
                )
    if contrast_rows:
        emit(
            "control_contrasts",
            pd.DataFrame(contrast_rows),
            "Best-detector contrasts vs control levels (0.999 CI)",
        )

    ols_rows = []
    r2_rows = []
    for response in ("logit_auc", "log_lift"):
        frame = build_factor_frame(records, RESPONSE_METRIC[response], alpha)
        if frame.empty:
            continue
        for label, regressors in (
            ("real", BASE_REGRESSORS),
            ("discrete", DISCRETE_REGRESSORS),
        ):
            try:
                result = ols_fit(frame, response, regressors)
            except ValueError as exc:
                logger.warning("OLS (%s, %s) failed: %s", response, label, exc)
                continue
            r2_rows.append(
                {"response": response, "variables": label, "r_squared": result.r_squared}
            )
            if label == "real":
                for dim in ("logit_rf", "logit_pd", "nc", "log_ir"):
                    ols_rows.append(
                        {
                            "response": response,
                            "term": dim,
                            "coefficient": result.coefficients[dim],
                        }
                    )
        try:
            abl = ablation_r2(frame, response)
            abl.insert(0, "response", response)
            emit(
                f"ablation_r2_{response}",
                abl,
                f"R^2 loss when variables are removed ({response})",
            )
        except ValueError as exc:
            logger.warning("ablation (%s) failed: %s", response, exc)
    if r2_rows:
        emit(
            "ols_r2",
            pd.DataFrame(r2_rows),
            "Linear model fit by variable type",
        )
    if ols_rows:
        emit(
            "ols_dimension_coefficients",
            pd.DataFrame(ols_rows),
            "Problem-dimension coefficients (real-variable model)",
        )

    report_path = rdir / "report.txt"
    report_path.write_text("\n".join(sections))
    summary = {"tables": len(sections), "report": str(report_path)}
    logger.info("report: %s", summary)
    return summary
