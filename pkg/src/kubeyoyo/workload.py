"""Request-rate schedules: steady load, flat DDoS and YoYo bursts."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .autoscaler import ClusterConfig, ConfigError


class WorkloadKind(str, Enum):
    STEADY = "steady"
    FLAT_DDOS = "flat_ddos"
    YOYO = "yoyo"


@dataclass(frozen=True)
class Jitter:
    """Per-tick multiplicative rate noise standing in for load-generator timers.

    ``constant`` timers carry a fixed inter-request delay and leave the rate
    unchanged; ``random`` timers scale each tick by a factor in ``[lo, hi]``.
    """

    kind: str = "none"  # none | constant | random
    delay: float = 0.0
    lo: float = 0.8
    hi: float = 1.2

    def __post_init__(self):
        if self.kind not in ("none", "constant", "random"):
            raise ConfigError(f"unknown jitter kind {self.kind!r}", "jitter")
        if self.kind == "random" and not 0 <= self.lo <= self.hi:
            raise ConfigError("random jitter needs 0 <= lo <= hi", "jitter")


@dataclass(frozen=True)
class WorkloadSchedule:
    kind: WorkloadKind = WorkloadKind.STEADY
    base_rate_r: float = 30.0
    power_k: float = 1.0
    t_on: int = 600
    t_off: int = 1200
    cycles_n: int = 1
    ramp_up: int = 0
    jitter: Jitter = field(default_factory=Jitter)
    seed: int = 0

    @property
    def period(self) -> int:
        return self.t_on + self.t_off

    def validate(self) -> "WorkloadSchedule":
        if self.base_rate_r <= 0:
            raise ConfigError("base_rate_r must be > 0", "base_rate_r")
        if self.power_k < 1 and self.kind is not WorkloadKind.STEADY:
            raise ConfigError("power_k must be >= 1", "power_k")
        if self.ramp_up < 0:
            raise ConfigError("ramp_up must be >= 0", "ramp_up")
        if self.kind is WorkloadKind.YOYO:
            if self.t_on <= 0 or self.t_off <= 0:
                raise ConfigError("t_on and t_off must be > 0", "t_on")
            if self.cycles_n < 1:
                raise ConfigError("cycles_n must be >= 1", "cycles_n")
        return self

    def attack_end(self) -> int | None:
        """End of the last on-phase for YoYo schedules."""
        if self.kind is not WorkloadKind.YOYO:
            return None
        return (self.cycles_n - 1) * self.period + self.t_on


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def jitter_factors(schedule: WorkloadSchedule, times: np.ndarray) -> np.ndarray:
    """Deterministic per-tick factors; a pure function of (seed, t)."""
    times = np.asarray(times)
    j = schedule.jitter
    if j.kind != "random":
        return np.ones(times.shape)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.full(times.shape, schedule.seed, dtype=np.uint64))
        h = _splitmix64(key ^ times.astype(np.uint64))
    u = (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return j.lo + (j.hi - j.lo) * u


def rates(schedule: WorkloadSchedule, times) -> np.ndarray:
    """Vectorized :func:`rate_at`."""
    t = np.asarray(times, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    r = schedule.base_rate_r
    peak = (schedule.power_k + 1) * r

    def ramp(elapsed):
        if schedule.ramp_up <= 0:
            return np.full(elapsed.shape, peak)
        frac = np.minimum(elapsed / schedule.ramp_up, 1.0)
        return r + (peak - r) * frac

    if schedule.kind is WorkloadKind.STEADY:
        out = np.full(t.shape, r)
    elif schedule.kind is WorkloadKind.FLAT_DDOS:
        out = ramp(t)
    else:
        phase = np.mod(t, schedule.period)
        on = (phase < schedule.t_on) & (t < schedule.cycles_n * schedule.period)
        out = np.where(on, ramp(phase), r)
    return out * jitter_factors(schedule, t.astype(np.int64))


def rate_at(schedule: WorkloadSchedule, t: float) -> float:
    """Offered request rate (requests/sec) at time ``t``."""
    return float(rates(schedule, [t])[0])


def optimal_t_on(config: ClusterConfig) -> int:
    """Shortest on-phase that carries the attack through pod and node scale-up."""
    return config.i_p_up + config.w_p_up + config.i_n_up + config.w_n_up


def optimal_t_off(config: ClusterConfig) -> int:
    """Off-phase long enough for pods and then nodes to scale all the way down."""
    return config.i_p_down + config.w_p_down + config.i_n_down + config.w_n_down


_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([hms]?)\s*$")
_UNIT = {"": 1, "s": 1, "m": 60, "h": 3600}


def parse_duration(value) -> int:
    """Seconds from ``90``, ``"90"``, ``"90s"``, ``"10m"`` or ``"1h"``."""
    if isinstance(value, bool):
        raise ConfigError(f"invalid duration {value!r}")
    if isinstance(value, (int, float)):
        seconds = float(value)
    else:
        m = _DURATION.match(str(value))
        if not m:
            raise ConfigError(f"invalid duration {value!r}")
        seconds = float(m.group(1)) * _UNIT[m.group(2)]
    if seconds != int(seconds):
        raise ConfigError(f"duration {value!r} is not a whole number of seconds")
    return int(seconds)


def parse_attack(text: str, base: WorkloadSchedule | None = None) -> WorkloadSchedule:
    """Parse the shorthand ``"k=20 on=10m off=20m n=6"`` into a YoYo schedule.

    Optional keys: ``r`` (base rate), ``ramp``, ``seed``. ``on``/``off`` omitted
    together with ``n`` yields a flat DDoS of power ``k``.
    """
    base = base or WorkloadSchedule()
    fields = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {token!r}")
        fields[key.strip().lower()] = value.strip()
    known = {"k", "on", "off", "n", "r", "ramp", "seed"}
    unknown = set(fields) - known
    if unknown:
        raise ConfigError(f"unknown attack keys: {', '.join(sorted(unknown))}")
    try:
        kw = {}
        if "k" in fields:
            kw["power_k"] = float(fields["k"])
        if "r" in fields:
            kw["base_rate_r"] = float(fields["r"])
        if "ramp" in fields:
            kw["ramp_up"] = parse_duration(fields["ramp"])
        if "seed" in fields:
            kw["seed"] = int(fields["seed"])
        if "on" in fields or "off" in fields:
            kw["kind"] = WorkloadKind.YOYO
            kw["t_on"] = parse_duration(fields.get("on", base.t_on))
            kw["t_off"] = parse_duration(fields.get("off", base.t_off))
            kw["cycles_n"] = int(fields.get("n", base.cycles_n))
        else:
            kw["kind"] = WorkloadKind.FLAT_DDOS
    except ValueError as exc:
        raise ConfigError(f"bad attack shorthand {text!r}: {exc}") from None
    return replace(base, **kw).validate()
