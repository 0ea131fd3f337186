"""Two-tier Kubernetes autoscaling: HPA on pods, Cluster Autoscaler on nodes.

Both controllers are deterministic state machines over a :class:`ClusterState`
advanced by the simulation engine one tick at a time. All times are integer
seconds of simulated time.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ClusterConfig:
    u_target: float = 50.0
    pods_per_node_R: int = 3
    initial_pods_Np: int = 3
    initial_nodes_Nn: int = 4
    min_nodes: int = 3
    max_nodes: int = 50
    i_p_up: int = 60
    i_p_down: int = 300
    i_n_up: int = 10
    i_n_down: int = 600
    w_p_up: int = 30
    w_p_down: int = 5
    w_n_up: int = 120
    w_n_down: int = 120
    pod_capacity_rps: float = 20.0
    pod_burst_limit: float = 300.0
    hpa_tolerance: float = 0.10
    # Initial nodes carry system workloads and are never scaled down.
    pin_initial_nodes: bool = True

    DURATIONS = ("i_p_up", "i_p_down", "i_n_up", "i_n_down",
                 "w_p_up", "w_p_down", "w_n_up", "w_n_down")

    def validate(self) -> "ClusterConfig":
        for name in self.DURATIONS:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0", name)
        if self.min_nodes < 1:
            raise ConfigError("min_nodes must be >= 1", "min_nodes")
        if self.max_nodes < self.min_nodes:
            raise ConfigError("max_nodes must be >= min_nodes", "max_nodes")
        if not self.min_nodes <= self.initial_nodes_Nn <= self.max_nodes:
            raise ConfigError("initial_nodes_Nn must lie in [min_nodes, max_nodes]",
                              "initial_nodes_Nn")
        if self.pods_per_node_R < 1:
            raise ConfigError("pods_per_node_R must be >= 1", "pods_per_node_R")
        if not 1 <= self.initial_pods_Np <= self.initial_nodes_Nn * self.pods_per_node_R:
            raise ConfigError("initial_pods_Np must be in [1, initial_nodes_Nn * pods_per_node_R]",
                              "initial_pods_Np")
        if self.u_target <= 0:
            raise ConfigError("u_target must be > 0", "u_target")
        if self.pod_burst_limit < 100:
            raise ConfigError("pod_burst_limit must be >= 100", "pod_burst_limit")
        if self.pod_capacity_rps <= 0:
            raise ConfigError("pod_capacity_rps must be > 0", "pod_capacity_rps")
        if not 0 <= self.hpa_tolerance < 1:
            raise ConfigError("hpa_tolerance must be in [0, 1)", "hpa_tolerance")
        return self


class PodPhase(str, Enum):
    PENDING = "Pending"
    WARMING = "Warming"
    READY = "Ready"
    TERMINATING = "Terminating"


class NodePhase(str, Enum):
    WARMING = "Warming"
    READY = "Ready"
    DRAINING = "Draining"


@dataclass
class PodState:
    id: int
    phase: PodPhase
    phase_entered_at: int
    node_id: Optional[int] = None


@dataclass
class NodeState:
    id: int
    phase: NodePhase
    phase_entered_at: int
    idle_since: Optional[int] = None
    created_at: int = 0
    pinned: bool = False


@dataclass(frozen=True)
class ScalingAction:
    """A controller decision. ``since`` is when the triggering condition began."""

    t: int
    kind: str  # create_pods | terminate_pods | create_nodes | drain_nodes
    count: int
    since: Optional[int] = None
    ids: tuple = ()


@dataclass(frozen=True)
class Event:
    """A lifecycle transition that is a consequence of earlier actions."""

    t: int
    kind: str  # pod_ready | pod_removed | node_ready | node_removed
    id: int
    node_id: Optional[int] = None


@dataclass
class ClusterState:
    now: int = 0
    pods: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=dict)
    hpa_breach_up_since: Optional[int] = None
    hpa_breach_down_since: Optional[int] = None
    actions: list = field(default_factory=list)
    events: list = field(default_factory=list)
    # (created_at, removed_at or None) per node id, for billing
    node_spans: dict = field(default_factory=dict)
    _next_pod: int = 0
    _next_node: int = 0

    @classmethod
    def initial(cls, config: ClusterConfig) -> "ClusterState":
        """Steady-state cluster at t=0: N_n ready nodes, N_p ready pods packed onto them."""
        state = cls()
        for _ in range(config.initial_nodes_Nn):
            node = state._new_node(NodePhase.READY)
            node.pinned = config.pin_initial_nodes
        for _ in range(config.initial_pods_Np):
            state._new_pod(PodPhase.PENDING)
        place_pending(state, config)
        for pod in state.pods.values():
            pod.phase = PodPhase.READY
        refresh_idle(state)
        return state

    def _new_pod(self, phase: PodPhase) -> PodState:
        pod = PodState(self._next_pod, phase, self.now)
        self.pods[pod.id] = pod
        self._next_pod += 1
        return pod

    def _new_node(self, phase: NodePhase) -> NodeState:
        node = NodeState(self._next_node, phase, self.now, created_at=self.now)
        self.nodes[node.id] = node
        self.node_spans[node.id] = (self.now, None)
        self._next_node += 1
        return node

    # population queries
    def live_pods(self) -> list:
        return [p for p in self.pods.values() if p.phase is not PodPhase.TERMINATING]

    def ready_pods(self) -> int:
        return sum(1 for p in self.pods.values() if p.phase is PodPhase.READY)

    def ready_nodes(self) -> int:
        return sum(1 for n in self.nodes.values() if n.phase is NodePhase.READY)

    def occupancy(self, include_terminating: bool = False) -> Counter:
        counts: Counter = Counter()
        for p in self.pods.values():
            if p.node_id is None:
                continue
            if include_terminating or p.phase is not PodPhase.TERMINATING:
                counts[p.node_id] += 1
        return counts


def average_relative_cpu(per_pod_utilization: Sequence[float]) -> float:
    """Mean relative CPU utilization across pods, in percent (may exceed 100)."""
    if len(per_pod_utilization) == 0:
        raise ValueError("no pods to average")
    if any(u < 0 for u in per_pod_utilization):
        raise ValueError("utilization must be non-negative")
    return sum(per_pod_utilization) / len(per_pod_utilization)


def target_pod_count(per_pod_utilization: Sequence[float], u_target: float,
                     current_pods: int, tolerance: float = 0.10) -> int:
    """HPA desired replica count.

    Inside the tolerance band around ``u_target`` the current count is kept;
    otherwise ``ceil(sum(U_i) / u_target)``.
    """
    if current_pods != len(per_pod_utilization):
        raise ValueError("current_pods must equal the number of utilization samples")
    if u_target <= 0:
        raise ValueError("u_target must be > 0")
    ratio = average_relative_cpu(per_pod_utilization) / u_target
    if 1 - tolerance <= ratio <= 1 + tolerance:
        return current_pods
    return math.ceil(sum(per_pod_utilization) / u_target)


def place_pending(state: ClusterState, config: ClusterConfig) -> int:
    """Bind Pending pods (oldest first) to Ready nodes with free slots (lowest id first)."""
    pending = [p for p in state.pods.values() if p.phase is PodPhase.PENDING]
    if not pending:
        return 0
    occ = state.occupancy()
    free = [(n.id, config.pods_per_node_R - occ[n.id]) for n in state.nodes.values()
            if n.phase is NodePhase.READY and occ[n.id] < config.pods_per_node_R]
    placed = 0
    slot = 0
    for pod in pending:
        while slot < len(free) and free[slot][1] == 0:
            slot += 1
        if slot == len(free):
            break
        node_id, room = free[slot]
        free[slot] = (node_id, room - 1)
        pod.node_id = node_id
        pod.phase = PodPhase.WARMING
        pod.phase_entered_at = state.now
        state.nodes[node_id].idle_since = None
        placed += 1
    return placed


def refresh_idle(state: ClusterState) -> None:
    occ = state.occupancy(include_terminating=True)
    for node in state.nodes.values():
        if node.phase is not NodePhase.READY:
            continue
        if occ[node.id] == 0:
            if node.idle_since is None:
                node.idle_since = state.now
        else:
            node.idle_since = None


def advance_lifecycle(state: ClusterState, config: ClusterConfig) -> list:
    """Apply timer-driven transitions due at ``state.now``.

    Returns the pods that were Ready on a node removed this tick (normally
    empty: only idle nodes are drained).
    """
    now = state.now
    for pod in list(state.pods.values()):
        if pod.phase is PodPhase.WARMING and now - pod.phase_entered_at >= config.w_p_up:
            pod.phase = PodPhase.READY
            pod.phase_entered_at = now
            state.events.append(Event(now, "pod_ready", pod.id, pod.node_id))
        elif pod.phase is PodPhase.TERMINATING and now - pod.phase_entered_at >= config.w_p_down:
            del state.pods[pod.id]
            state.events.append(Event(now, "pod_removed", pod.id, pod.node_id))

    displaced = []
    for node in list(state.nodes.values()):
        if node.phase is NodePhase.WARMING and now - node.phase_entered_at >= config.w_n_up:
            node.phase = NodePhase.READY
            node.phase_entered_at = now
            state.events.append(Event(now, "node_ready", node.id))
        elif node.phase is NodePhase.DRAINING and now - node.phase_entered_at >= config.w_n_down:
            for pod in list(state.pods.values()):
                if pod.node_id != node.id:
                    continue
                if pod.phase is PodPhase.TERMINATING:
                    del state.pods[pod.id]
                    continue
                if pod.phase is PodPhase.READY:
                    displaced.append(pod.id)
                pod.phase = PodPhase.PENDING
                pod.node_id = None
                pod.phase_entered_at = now
            del state.nodes[node.id]
            state.node_spans[node.id] = (state.node_spans[node.id][0], now)
            state.events.append(Event(now, "node_removed", node.id))

    place_pending(state, config)
    refresh_idle(state)
    return displaced


def hpa_step(state: ClusterState, config: ClusterConfig, desired: int) -> list:
    """Track how long ``desired`` has differed from the live pod count and scale when due.

    Live pods are every non-Terminating pod, including Pending and Warming ones.
    """
    now = state.now
    desired = max(1, int(desired))
    live = state.live_pods()
    n_live = len(live)
    actions = []

    if desired > n_live:
        state.hpa_breach_down_since = None
        if state.hpa_breach_up_since is None:
            state.hpa_breach_up_since = now
        if now - state.hpa_breach_up_since >= config.i_p_up:
            count = desired - n_live
            ids = tuple(state._new_pod(PodPhase.PENDING).id for _ in range(count))
            actions.append(ScalingAction(now, "create_pods", count,
                                         state.hpa_breach_up_since, ids))
            state.hpa_breach_up_since = None
            place_pending(state, config)
    elif desired < n_live:
        state.hpa_breach_up_since = None
        if state.hpa_breach_down_since is None:
            state.hpa_breach_down_since = now
        if now - state.hpa_breach_down_since >= config.i_p_down:
            count = n_live - desired
            victims = sorted(live, key=lambda p: p.id, reverse=True)[:count]
            for pod in victims:
                if pod.phase is PodPhase.PENDING:
                    del state.pods[pod.id]
                    state.events.append(Event(now, "pod_removed", pod.id, None))
                else:
                    pod.phase = PodPhase.TERMINATING
                    pod.phase_entered_at = now
            actions.append(ScalingAction(now, "terminate_pods", count,
                                         state.hpa_breach_down_since,
                                         tuple(p.id for p in victims)))
            state.hpa_breach_down_since = None
    else:
        state.hpa_breach_up_since = None
        state.hpa_breach_down_since = None

    state.actions.extend(actions)
    return actions


def ca_step(state: ClusterState, config: ClusterConfig, tick: int = 1) -> list:
    """Cluster Autoscaler: node scale-up for unplaceable pods, drain of long-idle nodes."""
    now = state.now
    R = config.pods_per_node_R
    actions = []

    if now % config.i_n_up < tick:
        pending = sum(1 for p in state.pods.values() if p.phase is PodPhase.PENDING)
        if pending:
            occ = state.occupancy()
            free = 0
            for node in state.nodes.values():
                if node.phase is NodePhase.READY:
                    free += max(0, R - occ[node.id])
                elif node.phase is NodePhase.WARMING:
                    free += R
            unplaceable = pending - free
            if unplaceable > 0:
                count = min(math.ceil(unplaceable / R), config.max_nodes - len(state.nodes))
                if count > 0:
                    ids = tuple(state._new_node(NodePhase.WARMING).id for _ in range(count))
                    actions.append(ScalingAction(now, "create_nodes", count, None, ids))

    refresh_idle(state)
    ready = state.ready_nodes()
    idle = sorted((n for n in state.nodes.values()
                   if n.phase is NodePhase.READY and not n.pinned
                   and n.idle_since is not None
                   and now - n.idle_since >= config.i_n_down),
                  key=lambda n: (n.idle_since, n.id))
    drained = []
    for node in idle:
        if ready - 1 < config.min_nodes:
            break
        node.phase = NodePhase.DRAINING
        node.phase_entered_at = now
        ready -= 1
        drained.append(node)
    if drained:
        actions.append(ScalingAction(now, "drain_nodes", len(drained),
                                     min(n.idle_since for n in drained),
                                     tuple(n.id for n in drained)))
    state.actions.extend(actions)
    return actions
