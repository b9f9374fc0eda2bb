"""Anomaly detector suite behind a single interface.

Each detector maps a benchmark's feature matrix to one real score per point,
oriented so that larger means more anomalous.  All detectors are
deterministic given their seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .baseline import trivial_score
from .egmm import egmm_score
from .forest import iforest_score
from .loda import loda_score
from .neighbors import abod_score, lof_score
from .rkde import rkde_score

DETECTORS: Mapping[str, Callable[..., np.ndarray]] = MappingProxyType(
    {
        "trivial": trivial_score,
        "iforest": iforest_score,
        "lof": lof_score,
        "abod": abod_score,
        "loda": loda_score,
        "egmm": egmm_score,
        "rkde": rkde_score,
    }
)

# detectors whose scores do not depend on a seed
UNSEEDED = frozenset({"trivial", "lof", "abod"})


@dataclass(frozen=True)
class DetectorConfig:
    name: str
    parameters: Mapping[str, object] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.name not in DETECTORS:
            raise ValueError(
                f"unknown detector {self.name!r}; known: {sorted(DETECTORS)}"
            )
        object.__setattr__(self, "parameters", dict(self.parameters))


@dataclass
class ScoreVector:
    scores: np.ndarray
    detector: DetectorConfig

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 1:
            raise ValueError("scores must be a flat vector")
        if not np.isfinite(self.scores).all():
            raise ValueError(f"{self.detector.name} produced non-finite scores")


def run_detector(config: DetectorConfig, data: np.ndarray) -> ScoreVector:
    data = np.asarray(data, dtype=float)
    fn = DETECTORS[config.name]
    kwargs = dict(config.parameters)
    if config.name not in UNSEEDED:
        kwargs.setdefault("seed", config.seed if config.seed is not None else 0)
    scores = fn(data, **kwargs)
    if scores.shape[0] != data.shape[0]:
        raise RuntimeError(f"{config.name} returned {scores.shape[0]} scores for {data.shape[0]} points")
    return ScoreVector(scores=scores, detector=config)


__all__ = [
    "DETECTORS",
    "UNSEEDED",
    "DetectorConfig",
    "ScoreVector",
    "run_detector",
    "trivial_score",
    "iforest_score",
    "lof_score",
    "abod_score",
    "loda_score",
    "egmm_score",
    "rkde_score",
]
