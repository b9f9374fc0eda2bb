"""Problem-dimension levels used during benchmark construction.

Four controlled dimensions, each with a ``*-0`` control level that disables
its constraint:

* ``pd`` -- point difficulty: the benchmark's mean oracle difficulty must stay
  inside the level's bin while points are drawn.
* ``rf`` -- relative frequency: target anomaly fraction of the benchmark.
* ``nc`` -- normalized clusteredness: sign constraint on
  log(var_normals / var_anomalies).
* ``fi`` -- feature irrelevance: target ratio of mean pairwise distance after
  appending label-free features.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DifficultyBin:
    lo: float
    hi: float
    lo_inclusive: bool

    def contains(self, value: float) -> bool:
        if self.lo_inclusive:
            above = value >= self.lo
        else:
            above = value > self.lo
        return above and value < self.hi


_SIXTH = 1.0 / 6.0
_THIRD = 1.0 / 3.0

# pd-1 is open at zero; the rest are closed below, open above.
PD_BINS: dict[str, DifficultyBin | None] = {
    "pd-0": None,
    "pd-1": DifficultyBin(0.0, _SIXTH, lo_inclusive=False),
    "pd-2": DifficultyBin(_SIXTH, _THIRD, lo_inclusive=True),
    "pd-3": DifficultyBin(_THIRD, 0.5, lo_inclusive=True),
    "pd-4": DifficultyBin(0.5, 1.0, lo_inclusive=True),
}

RF_TARGETS: dict[str, float | None] = {
    "rf-0": None,
    "rf-1": 0.001,
    "rf-2": 0.005,
    "rf-3": 0.01,
    "rf-4": 0.05,
    "rf-5": 0.1,
}

# +1 demands clustered anomalies (nc > 0), -1 scattered (nc < 0).
NC_SIGNS: dict[str, int | None] = {
    "nc-0": None,
    "nc-1": -1,
    "nc-2": +1,
}

FI_RATIOS: dict[str, float] = {
    "fi-0": 1.0,
    "fi-1": 1.2,
    "fi-2": 1.5,
    "fi-3": 2.0,
}

DIMENSIONS = ("pd", "rf", "nc", "fi")

ALL_LEVELS: dict[str, tuple[str, ...]] = {
    "pd": tuple(PD_BINS),
    "rf": tuple(RF_TARGETS),
    "nc": tuple(NC_SIGNS),
    "fi": tuple(FI_RATIOS),
}


def validate_level(dimension: str, level: str) -> str:
    levels = ALL_LEVELS.get(dimension)
    if levels is None:
        raise ValueError(f"unknown problem dimension {dimension!r}")
    if level not in levels:
        raise ValueError(f"unknown {dimension} level {level!r}")
    return level
