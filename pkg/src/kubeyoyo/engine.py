"""Tick-by-tick simulation of a cluster under a workload schedule."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .autoscaler import (ClusterConfig, ClusterState, ConfigError, advance_lifecycle,
                         ca_step, hpa_step, target_pod_count)
from .workload import WorkloadSchedule, WorkloadKind, rates

TRACE_COLUMNS = ("t", "offered_rate", "ready_pods", "total_pods", "ready_nodes",
                 "total_nodes", "avg_relative_cpu", "response_time", "errors")


@dataclass(frozen=True)
class ServiceModelConfig:
    """Piecewise-linear latency model with a utilization knee.

    ``latency_slope`` defaults to the value that puts latency at five times
    ``base_latency`` when utilization reaches 100%.
    """

    base_latency: float = 20.0
    knee_utilization: float = 0.7
    latency_slope: Optional[float] = None
    saturation_latency: float = 150.0
    model_rescheduling_errors: bool = False

    @property
    def slope(self) -> float:
        if self.latency_slope is not None:
            return self.latency_slope
        return 4 * self.base_latency / (1 - self.knee_utilization)

    def validate(self) -> "ServiceModelConfig":
        if self.base_latency <= 0:
            raise ConfigError("base_latency must be > 0", "base_latency")
        if not 0 < self.knee_utilization < 1:
            raise ConfigError("knee_utilization must be in (0, 1)", "knee_utilization")
        if self.saturation_latency < self.base_latency:
            raise ConfigError("saturation_latency must be >= base_latency", "saturation_latency")
        if self.slope < 0:
            raise ConfigError("latency_slope must be >= 0", "latency_slope")
        return self


def pod_utilization(offered_rate: float, ready_pods: int, config: ClusterConfig) -> float:
    """Relative CPU (percent) of each ready pod when load splits evenly."""
    if ready_pods < 1:
        raise ValueError("no ready pods to carry the load")
    per_pod = offered_rate / ready_pods
    return min(config.pod_burst_limit, 100.0 * per_pod / config.pod_capacity_rps)


def response_time(utilization: float, model: ServiceModelConfig,
                  burst_limit: Optional[float] = None) -> float:
    """Response time in ms for a pod at ``utilization`` percent.

    Flat at ``base_latency`` up to the knee, linear above it, and
    ``saturation_latency`` once pods sit at the burst cap. The linear branch is
    clipped at ``saturation_latency`` so the curve stays monotone.
    """
    if utilization < 0:
        raise ValueError("utilization must be >= 0")
    if burst_limit is not None and utilization >= burst_limit:
        return model.saturation_latency
    rho = utilization / 100.0
    if rho <= model.knee_utilization:
        return model.base_latency
    return min(model.base_latency + model.slope * (rho - model.knee_utilization),
               model.saturation_latency)


@dataclass
class Trace:
    """Per-tick telemetry plus the controller logs that produced it.

    Population columns are end-of-tick values except ``ready_pods``, which is
    the count that served the tick's load.
    """

    columns: dict
    actions: list = field(default_factory=list)
    events: list = field(default_factory=list)
    node_spans: list = field(default_factory=list)
    duration: int = 0

    def __len__(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def rows(self):
        cols = [self.columns[c] for c in TRACE_COLUMNS]
        for values in zip(*cols):
            yield {c: _plain(v) for c, v in zip(TRACE_COLUMNS, values)}

    def window(self, start: int, end: int) -> np.ndarray:
        """Boolean mask for ``start <= t < end``."""
        t = self.columns["t"]
        return (t >= start) & (t < end)

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in self.rows():
            writer.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])
        return buf.getvalue()

    def jsonl_text(self) -> str:
        return "".join(json.dumps(row) + "\n" for row in self.rows())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.jsonl_text())

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
                raise ValueError(f"{path}: unexpected trace header {reader.fieldnames}")
            data = {c: [] for c in TRACE_COLUMNS}
            for row in reader:
                for c in TRACE_COLUMNS:
                    data[c].append(float(row[c]))
        columns = {c: np.asarray(v) for c, v in data.items()}
        for c in ("t", "ready_pods", "total_pods", "ready_nodes", "total_nodes", "errors"):
            columns[c] = columns[c].astype(np.int64)
        duration = int(columns["t"][-1]) + 1 if len(columns["t"]) else 0
        return cls(columns, duration=duration)


def _plain(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


def run_simulation(config: ClusterConfig, service: ServiceModelConfig,
                   schedule: WorkloadSchedule, duration: int,
                   seed: Optional[int] = None, tick: int = 1) -> Trace:
    """Simulate ``duration`` seconds and return the telemetry trace.

    A ``seed`` replaces the schedule's own jitter seed.
    """
    config.validate()
    service.validate()
    schedule.validate()
    if tick < 1 or duration < tick:
        raise ConfigError("duration must cover at least one tick", "duration")
    if seed is not None:
        schedule = replace(schedule, seed=seed)

    state = ClusterState.initial(config)
    times = np.arange(0, duration, tick, dtype=np.int64)
    offered = rates(schedule, times)
    n = len(times)
    cols = {
        "t": times,
        "offered_rate": offered,
        "ready_pods": np.zeros(n, dtype=np.int64),
        "total_pods": np.zeros(n, dtype=np.int64),
        "ready_nodes": np.zeros(n, dtype=np.int64),
        "total_nodes": np.zeros(n, dtype=np.int64),
        "avg_relative_cpu": np.zeros(n),
        "response_time": np.zeros(n),
        "errors": np.zeros(n, dtype=np.int64),
    }

    for i, t in enumerate(times):
        state.now = int(t)
        n_nodes_before = len(state.nodes)
        ready_before = state.ready_pods()
        displaced = advance_lifecycle(state, config)
        removed_nodes = n_nodes_before - len(state.nodes)
        rate = float(offered[i])
        ready = state.ready_pods()
        errors = 0.0

        if ready:
            u = pod_utilization(rate, ready, config)
            desired = target_pod_count([u] * ready, config.u_target, ready,
                                       config.hpa_tolerance)
            rt = response_time(u, service, config.pod_burst_limit)
        else:
            # no metrics from any pod: HPA holds, every request fails
            u = config.pod_burst_limit
            desired = len(state.live_pods())
            rt = service.saturation_latency
            errors = rate * tick

        if service.model_rescheduling_errors and removed_nodes:
            errors += rate * tick * _disrupted_share(displaced, ready_before,
                                                     removed_nodes, n_nodes_before)

        hpa_step(state, config, desired)
        ca_step(state, config, tick)

        cols["ready_pods"][i] = ready
        cols["total_pods"][i] = len(state.live_pods())
        cols["ready_nodes"][i] = state.ready_nodes()
        cols["total_nodes"][i] = len(state.nodes)
        cols["avg_relative_cpu"][i] = u
        cols["response_time"][i] = rt
        cols["errors"][i] = int(math.floor(errors + 0.5))

    spans = [(start, duration if end is None else end)
             for start, end in state.node_spans.values()]
    return Trace(cols, actions=list(state.actions), events=list(state.events),
                 node_spans=spans, duration=duration)


def _disrupted_share(displaced, ready_before, removed_nodes, nodes_before) -> float:
    """Share of a tick's requests lost to pod rescheduling when nodes go away.

    Ready pods on a removed node lose their share outright. Otherwise the
    service's single-replica controller sits on a removed node with probability
    removed/total, and its restart drops that share of requests in expectation.
    """
    if displaced:
        return min(1.0, len(displaced) / max(ready_before, 1))
    return removed_nodes / max(nodes_before, 1)


def attack_window(schedule: WorkloadSchedule, duration: int) -> tuple:
    """Span over which damage is averaged.

    YoYo: first on-phase start until ``t_off`` after the last on-phase ends.
    Flat DDoS and steady load: the whole run.
    """
    if schedule.kind is WorkloadKind.YOYO:
        return 0, min(duration, schedule.attack_end() + schedule.t_off)
    return 0, duration
