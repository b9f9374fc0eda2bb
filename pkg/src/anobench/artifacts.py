"""On-disk artifact formats and hashing.

All delimited files are comma-separated with a header row.  Floats are
serialized with ``repr`` (shortest round-trip), which makes every artifact
byte-identical across reruns of the same manifest.  JSON manifests are
written with sorted keys and no timestamps for the same reason; score-run
metadata is the one place wall time is recorded.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path
from typing import Iterable

import numpy as np


def fmt(value: float) -> str:
    return repr(float(value))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path: str | Path, payload: dict) -> str:
    """Atomic JSON write; returns the file's sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp.{os.getpid()}")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return sha256_file(path)


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_table(path: str | Path, header: list[str], rows: Iterable[Iterable]) -> str:
    """CSV with repr-formatted floats; returns the file's sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp.{os.getpid()}")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [fmt(v) if isinstance(v, (float, np.floating)) else v for v in row]
            )
    os.replace(tmp, path)
    return sha256_file(path)


# ---------------------------------------------------------------- mothersets


def write_motherset_files(mset, directory: str | Path) -> dict:
    """Motherset CSV (label + V1..Vd) plus sidecar manifest; returns manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    d = mset.features.shape[1]
    header = ["label"] + [f"V{j + 1}" for j in range(d)]
    rows = (
        ["anomaly" if a else "nominal"] + [fmt(v) for v in x]
        for a, x in zip(mset.is_anomaly, mset.features)
    )
    csv_sha = write_table(directory / "motherset.csv", header, rows)
    manifest = {
        "name": mset.name,
        "origin": mset.origin,
        "n_points": int(mset.features.shape[0]),
        "n_features": int(d),
        "n_candidate_anomalies": int(mset.is_anomaly.sum()),
        "n_candidate_normals": int((~mset.is_anomaly).sum()),
        "dropped_columns": list(mset.dropped_columns),
        "seed": mset.seed,
        "files": {"motherset.csv": csv_sha},
    }
    write_json(directory / "manifest.json", manifest)
    return manifest


def read_motherset_files(directory: str | Path):
    from .ingest import Motherset

    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    labels: list[bool] = []
    features: list[list[float]] = []
    with open(directory / "motherset.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "label":
            raise ValueError(f"malformed motherset file in {directory}")
        for row in reader:
            labels.append(row[0] == "anomaly")
            features.append([float(v) for v in row[1:]])
    return Motherset(
        name=manifest["name"],
        features=np.asarray(features, dtype=float),
        is_anomaly=np.asarray(labels, dtype=bool),
        origin=manifest["origin"],
        dropped_columns=tuple(manifest.get("dropped_columns", [])),
        seed=manifest.get("seed"),
    )


def write_difficulty_files(directory: str | Path, scores: np.ndarray, meta: dict) -> dict:
    directory = Path(directory)
    sha = write_table(
        directory / "difficulty.csv",
        ["point.id", "difficulty"],
        ((i, float(s)) for i, s in enumerate(scores)),
    )
    manifest = dict(meta)
    manifest["files"] = {"difficulty.csv": sha}
    write_json(directory / "difficulty_manifest.json", manifest)
    return manifest


def read_difficulty_files(directory: str | Path) -> np.ndarray:
    path = Path(directory) / "difficulty.csv"
    ids: list[int] = []
    vals: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(int(row[0]))
            vals.append(float(row[1]))
    out = np.empty(len(vals))
    out[np.asarray(ids)] = np.asarray(vals)
    return out


# ---------------------------------------------------------------- benchmarks


def write_benchmark_files(bench, directory: str | Path) -> dict:
    """Benchmark CSV (point.id, ground.truth, V1..Vd') plus manifest."""
    directory = Path(directory)
    d = bench.features.shape[1]
    header = ["point.id", "ground.truth"] + [f"V{j + 1}" for j in range(d)]
    rows = (
        [int(i), "anomaly" if a else "nominal"] + [fmt(v) for v in x]
        for i, a, x in zip(bench.source_indices, bench.is_anomaly, bench.features)
    )
    csv_sha = write_table(directory / "benchmark.csv", header, rows)
    manifest = {
        "benchmark_id": bench.benchmark_id,
        "motherset": bench.spec.motherset,
        "levels": {
            "pd": bench.spec.pd_level,
            "rf": bench.spec.rf_level,
            "nc": bench.spec.nc_level,
            "fi": bench.spec.fi_level,
        },
        "replicate": bench.spec.replicate,
        "seed": bench.spec.seed,
        "n_points": int(bench.features.shape[0]),
        "n_features": int(d),
        "n_anomalies": int(bench.is_anomaly.sum()),
        "n_normals": int((~bench.is_anomaly).sum()),
        "measured": {k: float(v) for k, v in bench.measured.items()},
        "source_indices": [int(i) for i in bench.source_indices],
        "files": {"benchmark.csv": csv_sha},
    }
    write_json(directory / "manifest.json", manifest)
    return manifest


def read_benchmark_files(directory: str | Path):
    """Returns (features, is_anomaly, point_ids, manifest)."""
    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    ids: list[int] = []
    labels: list[bool] = []
    features: list[list[float]] = []
    with open(directory / "benchmark.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(int(row[0]))
            labels.append(row[1] == "anomaly")
            features.append([float(v) for v in row[2:]])
    return (
        np.asarray(features, dtype=float),
        np.asarray(labels, dtype=bool),
        np.asarray(ids, dtype=np.int64),
        manifest,
    )


# -------------------------------------------------------------------- scores


def write_score_files(
    directory: str | Path,
    detector_name: str,
    point_ids: np.ndarray,
    scores: np.ndarray,
    meta: dict,
) -> dict:
    directory = Path(directory)
    sha = write_table(
        directory / f"{detector_name}.csv",
        ["point.id", "score"],
        ((int(i), float(s)) for i, s in zip(point_ids, scores)),
    )
    manifest = dict(meta)
    manifest["files"] = {f"{detector_name}.csv": sha}
    write_json(directory / f"{detector_name}.meta.json", manifest)
    return manifest


def read_score_file(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    ids: list[int] = []
    vals: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(int(row[0]))
            vals.append(float(row[1]))
    return np.asarray(ids, dtype=np.int64), np.asarray(vals, dtype=float)
