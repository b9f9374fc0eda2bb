"""Shared fixtures: small mothersets with precomputed difficulty, the
planted-outlier fixture, tiny CSV files, and the acceptance summary hook."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{name:<60s} {outcome}")

from anobench.difficulty import fit_difficulty_oracle, score_motherset
from anobench.ingest import Motherset, normalize_features


def make_two_blob_motherset(
    n_per_class: int = 250,
    d: int = 2,
    separation: float = 4.0,
    spread: float = 1.0,
    seed: int = 7,
) -> Motherset:
    """Two Gaussian blobs; anomalies slightly more dispersed than normals."""
    rng = np.random.default_rng(seed)
    normals = rng.normal(0.0, spread, (n_per_class, d))
    anomalies = rng.normal(separation, 1.5 * spread, (n_per_class, d))
    features = np.vstack([normals, anomalies])
    labels = np.zeros(2 * n_per_class, dtype=bool)
    labels[n_per_class:] = True
    features, _ = normalize_features(features)
    return Motherset(
        name="two-blob", features=features, is_anomaly=labels, origin="binary", seed=seed
    )


@pytest.fixture(scope="session")
def two_blob_motherset() -> Motherset:
    return make_two_blob_motherset()


@pytest.fixture(scope="session")
def two_blob_difficulty(two_blob_motherset):
    oracle = fit_difficulty_oracle(two_blob_motherset, seed=11)
    return oracle, score_motherset(oracle, two_blob_motherset)


@pytest.fixture()
def planted_outlier():
    """Tight 2-D cluster of 500 points plus one point 20 sigma away."""

    def build(seed: int = 0) -> tuple[np.ndarray, int]:
        rng = np.random.default_rng(seed)
        cluster = rng.normal(0.0, 1.0, (500, 2))
        outlier = np.array([[20.0, 20.0]])
        data = np.vstack([cluster, outlier])
        return data, 500

    return build


@pytest.fixture()
def tiny_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text(
        "x,y,label\n"
        "0.1,1.0,a\n"
        "0.2,2.0,a\n"
        "0.3,3.0,b\n"
        "0.4,4.0,b\n"
    )
    return path
