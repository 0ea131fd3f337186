"""Performance and economic damage, attacker cost, potency and billing."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .autoscaler import ConfigError
from .engine import Trace, attack_window
from .workload import WorkloadKind, WorkloadSchedule


class UndefinedMetric(ValueError):
    """A ratio whose denominator is zero; reported as undefined, never infinity."""


@dataclass(frozen=True)
class PricingConfig:
    # n1-standard-1 on-demand, per node-second
    node_rate: float = 0.0475 / 3600
    min_billing: int = 60
    mgmt_fee: float = 0.10

    def validate(self) -> "PricingConfig":
        if self.node_rate < 0:
            raise ConfigError("node_rate must be >= 0", "node_rate")
        if self.min_billing < 0:
            raise ConfigError("min_billing must be >= 0", "min_billing")
        if self.mgmt_fee < 0:
            raise ConfigError("mgmt_fee must be >= 0", "mgmt_fee")
        return self


@dataclass(frozen=True)
class DamageReport:
    d_p: float
    rd_p: Optional[float]
    d_e: float
    rd_e: Optional[float]
    cost: float
    potency: Optional[float]
    billed_amount: float

    def to_dict(self) -> dict:
        return asdict(self)


def _window_values(trace: Trace, column: str, window) -> np.ndarray:
    start, end = window
    if start < 0 or end > trace.duration:
        raise ValueError(f"window {window} outside trace of {trace.duration}s")
    values = trace[column][trace.window(start, end)]
    if values.size == 0:
        raise ValueError("empty damage window")
    return values


def mean_response(trace: Trace, window) -> float:
    """Average response time per request over ``window``.

    Ticks are weighted by their offered rate; with no traffic in the window
    the plain per-tick mean is used.
    """
    rt = _window_values(trace, "response_time", window)
    weights = _window_values(trace, "offered_rate", window)
    if weights.sum() <= 0:
        return float(np.mean(rt))
    return float(np.average(rt, weights=weights))


def performance_damage(trace: Trace, steady_response: float, window) -> float:
    """Mean extra response time (ms) per request over ``window`` relative to the steady state."""
    return max(0.0, mean_response(trace, window) - steady_response)


def economic_damage(trace: Trace, baseline_nodes: float, window) -> float:
    """Mean extra node count over ``window`` relative to the steady state."""
    mean = float(np.mean(_window_values(trace, "total_nodes", window)))
    return max(0.0, mean - baseline_nodes)


def relative_damage(attack_value: float, k1_baseline_value: float) -> float:
    if k1_baseline_value <= 0:
        raise UndefinedMetric("relative damage undefined: k=1 baseline is zero")
    return attack_value / k1_baseline_value


def attack_cost(k: float, t_on: float, T: float) -> float:
    if not 0 < t_on <= T:
        raise ValueError("need 0 < t_on <= T")
    return k * t_on / T


def potency(rd_e: float, cost: float) -> float:
    if cost <= 0:
        raise UndefinedMetric("potency undefined for zero attack cost")
    return rd_e / cost


def billed_for_spans(spans, duration: float, pricing: PricingConfig) -> float:
    """Per-second node billing with a minimum charge, plus the prorated cluster fee."""
    total = sum(pricing.node_rate * max(end - start, pricing.min_billing)
                for start, end in spans)
    return total + pricing.mgmt_fee * duration / 3600.0


def billed_cost(trace: Trace, pricing: PricingConfig) -> float:
    return billed_for_spans(trace.node_spans, trace.duration, pricing)


def schedule_cost(schedule: WorkloadSchedule) -> float:
    if schedule.kind is WorkloadKind.YOYO:
        return attack_cost(schedule.power_k, schedule.t_on, schedule.period)
    if schedule.kind is WorkloadKind.FLAT_DDOS:
        return float(schedule.power_k)
    return 0.0


def _maybe(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except UndefinedMetric:
        return None


def damage_report(attack: Trace, k1: Trace, steady: Trace,
                  schedule: WorkloadSchedule, pricing: PricingConfig) -> DamageReport:
    """Assemble a report from the {steady, k=1, k=K} run triplet.

    Steady-state baselines are the steady run's means over the same window.
    """
    window = attack_window(schedule, attack.duration)
    steady_response = mean_response(steady, window)
    baseline_nodes = float(np.mean(_window_values(steady, "total_nodes", window)))

    d_p = performance_damage(attack, steady_response, window)
    d_e = economic_damage(attack, baseline_nodes, window)
    rd_p = _maybe(relative_damage, d_p, performance_damage(k1, steady_response, window))
    rd_e = _maybe(relative_damage, d_e, economic_damage(k1, baseline_nodes, window))
    cost = schedule_cost(schedule)
    pot = None if rd_e is None else _maybe(potency, rd_e, cost)
    return DamageReport(d_p=d_p, rd_p=rd_p, d_e=d_e, rd_e=rd_e, cost=cost,
                        potency=pot, billed_amount=billed_cost(attack, pricing.validate()))


def fmt_ratio(value: Optional[float]) -> str:
    if value is None or math.isnan(value):
        return "undefined"
    return repr(value)
