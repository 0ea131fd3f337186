"""Scenario files: YAML documents with a ``schema_version`` and nested sections.

Example::

    schema_version: 1
    name: yoyo_k20
    duration: 90m
    seed: 0
    cluster:
      initial_pods_Np: 3
      i_p_up: 1m
    service:
      base_latency: 20
    pricing:
      node_rate: 0.0000132
    schedule:
      kind: yoyo
      base_rate_r: 30
      power_k: 20
      t_on: 10m
      t_off: 20m
      cycles_n: 3
      jitter: none        # or {constant: 0.3} or {random: [0.8, 1.2]}

Keys mirror the dataclass field names. Durations take plain seconds or a
``s``/``m``/``h`` suffix.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .autoscaler import ClusterConfig, ConfigError
from .damage import PricingConfig
from .engine import ServiceModelConfig
from .workload import Jitter, WorkloadKind, WorkloadSchedule, parse_duration

SCHEMA_VERSION = 1
BUILTIN_PREFIX = "builtin:"


class ScenarioError(ConfigError):
    """A scenario file problem, anchored to a line when one can be found."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = str(path) if path else "<scenario>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.path, self.line = path, line


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    service: ServiceModelConfig = field(default_factory=ServiceModelConfig)
    pricing: PricingConfig = field(default_factory=PricingConfig)
    schedule: WorkloadSchedule = field(default_factory=WorkloadSchedule)
    duration: int = 5400
    seed: int = 0
    output_dir: Optional[str] = None

    def validate(self) -> "Scenario":
        self.cluster.validate()
        self.service.validate()
        self.pricing.validate()
        self.schedule.validate()
        if self.duration < 1:
            raise ConfigError("duration must be >= 1s", "duration")
        if self.schedule.kind is WorkloadKind.YOYO and self.duration < self.schedule.period:
            raise ConfigError("duration must cover at least one full YoYo cycle", "duration")
        return self


_DURATION_FIELDS = {
    "cluster": set(ClusterConfig.DURATIONS),
    "pricing": {"min_billing"},
    "schedule": {"t_on", "t_off", "ramp_up"},
}


def _key_lines(node, prefix=(), out=None) -> dict:
    """Map key paths like ('cluster', 'i_p_up') to 1-based line numbers."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (str(key_node.value),)
            out[path] = key_node.start_mark.line + 1
            _key_lines(value_node, path, out)
    return out


def _coerce(section: str, cls, raw, lines, path):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ScenarioError(f"section '{section}' must be a mapping", path,
                            lines.get((section,)))
    names = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        line = lines.get((section, key))
        if key not in names:
            raise ScenarioError(f"unknown key '{section}.{key}'", path, line)
        try:
            if key in _DURATION_FIELDS.get(section, ()):
                value = parse_duration(value)
            elif section == "schedule" and key == "kind":
                value = WorkloadKind(str(value).lower())
            elif section == "schedule" and key == "jitter":
                value = parse_jitter(value)
            elif names[key].type in ("int", int) and isinstance(value, float) and value.is_integer():
                value = int(value)
        except (ConfigError, ValueError) as exc:
            raise ScenarioError(f"{section}.{key}: {exc}", path, line) from None
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioError(f"{section}: {exc}", path, lines.get((section,))) from None


def parse_jitter(value) -> Jitter:
    if value is None or value == "none":
        return Jitter()
    if value == "constant":
        return Jitter("constant")
    if value == "random":
        return Jitter("random")
    if isinstance(value, dict) and len(value) == 1:
        (kind, arg), = value.items()
        if kind == "constant":
            return Jitter("constant", delay=float(arg))
        if kind == "random":
            lo, hi = arg
            return Jitter("random", lo=float(lo), hi=float(hi))
    raise ConfigError(f"invalid jitter {value!r}")


def parse_scenario(text: str, path=None) -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", path,
                            mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", path, 1)
    lines = _key_lines(root)

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}", path,
                            lines.get(("schema_version",), 1))
    top = {"schema_version", "name", "duration", "seed", "output_dir",
           "cluster", "service", "pricing", "schedule"}
    for key in data:
        if key not in top:
            raise ScenarioError(f"unknown key '{key}'", path, lines.get((key,)))

    cluster = _coerce("cluster", ClusterConfig, data.get("cluster"), lines, path)
    service = _coerce("service", ServiceModelConfig, data.get("service"), lines, path)
    pricing = _coerce("pricing", PricingConfig, data.get("pricing"), lines, path)
    schedule = _coerce("schedule", WorkloadSchedule, data.get("schedule"), lines, path)
    try:
        if "duration" in data:
            duration = parse_duration(data["duration"])
        elif schedule.kind is WorkloadKind.YOYO:
            duration = schedule.cycles_n * schedule.period
        else:
            duration = Scenario.duration
        seed = int(data.get("seed", 0))
    except (ConfigError, ValueError) as exc:
        key = "duration" if "duration" in str(exc) or "duration" in data else "seed"
        raise ScenarioError(str(exc), path, lines.get((key,))) from None

    scenario = Scenario(name=str(data.get("name") or Path(str(path or "scenario")).stem),
                        cluster=cluster, service=service, pricing=pricing,
                        schedule=schedule, duration=duration, seed=seed,
                        output_dir=data.get("output_dir"))
    try:
        return scenario.validate()
    except ConfigError as exc:
        line = None
        if exc.key:
            for section in ("", "cluster", "service", "pricing", "schedule"):
                candidate = (section, exc.key) if section else (exc.key,)
                if candidate in lines:
                    line = lines[candidate]
                    break
        raise ScenarioError(str(exc), path, line) from None


def builtin_names() -> list:
    pkg = resources.files("kubeyoyo") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".yaml"))


def load_scenario(ref) -> Scenario:
    """Load from a path or ``builtin:<name>`` for the shipped scenario library."""
    ref = str(ref)
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        res = resources.files("kubeyoyo") / "scenarios" / f"{name}.yaml"
        if not res.is_file():
            raise ScenarioError(f"no builtin scenario {name!r}; have {', '.join(builtin_names())}")
        return parse_scenario(res.read_text(), ref)
    p = Path(ref)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", p) from None
    return parse_scenario(text, p)


def scenario_to_dict(s: Scenario) -> dict:
    """Plain-data form for logging alongside outputs."""
    def plain(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, WorkloadKind):
            return obj.value
        return obj
    return {"schema_version": SCHEMA_VERSION, **plain(s)}


def with_schedule(s: Scenario, schedule: WorkloadSchedule, name: Optional[str] = None) -> Scenario:
    duration = s.duration
    if schedule.kind is WorkloadKind.YOYO:
        duration = schedule.cycles_n * schedule.period
    return replace(s, schedule=schedule, duration=duration, name=name or s.name).validate()
