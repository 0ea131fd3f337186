"""Summary statistics over cluster telemetry, one vector per experiment."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine import Trace

REGULAR, ATTACK = 0, 1

# telemetry series -> trace column
SERIES = {
    "response_time": "response_time",
    "pods": "total_pods",
    "cpu_load": "avg_relative_cpu",
    "nodes": "total_nodes",
}
STATS = ("mean", "std", "max", "min", "median")
FEATURE_NAMES = tuple(f"{s}_{stat}" for s in SERIES for stat in STATS)


class TraceTooShort(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features")

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, (float(v) for v in self.values)))

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])


def series_stats(x) -> list:
    """mean, population std, max, min, median."""
    x = np.asarray(x, dtype=np.float64)
    return [x.mean(), x.std(), x.max(), x.min(), float(np.median(x))]


def extract_features(trace: Trace, cycle: int = 1800, label: Optional[int] = None,
                     min_cycles: int = 3) -> FeatureVector:
    """Five statistics of each telemetry series over the whole trace.

    The trace must cover at least ``min_cycles`` cycles of ``cycle`` seconds.
    """
    need = min_cycles * cycle
    if trace.duration < need:
        raise TraceTooShort(f"trace covers {trace.duration}s; need at least {need}s "
                            f"({min_cycles} cycles of {cycle}s)")
    values = []
    for column in SERIES.values():
        values.extend(series_stats(trace[column]))
    return FeatureVector(np.asarray(values, dtype=np.float64), label)
