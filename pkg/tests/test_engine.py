import numpy as np
import pytest

from kubeyoyo.autoscaler import ClusterConfig, ConfigError
from kubeyoyo.engine import (TRACE_COLUMNS, ServiceModelConfig, Trace, attack_window,
                             pod_utilization, response_time, run_simulation)
from kubeyoyo.workload import WorkloadKind, WorkloadSchedule

import oracles

CFG = ClusterConfig()
SVC = ServiceModelConfig()


def test_pod_utilization():
    assert pod_utilization(30, 3, CFG) == 50
    assert pod_utilization(0, 3, CFG) == 0
    assert pod_utilization(600, 3, CFG) == 300
    with pytest.raises(ValueError):
        pod_utilization(10, 0, CFG)


def test_response_time_curve():
    assert response_time(50, SVC) == 20
    assert response_time(300, SVC, burst_limit=300) == SVC.saturation_latency
    custom = ServiceModelConfig(base_latency=20, latency_slope=400, saturation_latency=1000)
    assert response_time(85, custom) == pytest.approx(80)
    grid = [response_time(u, SVC, 300) for u in range(0, 301)]
    assert all(a <= b for a, b in zip(grid, grid[1:]))


def test_service_validation():
    with pytest.raises(ConfigError):
        ServiceModelConfig(knee_utilization=1.2).validate()
    with pytest.raises(ConfigError):
        ServiceModelConfig(saturation_latency=5).validate()


def test_steady_run_is_an_equilibrium():
    trace = run_simulation(CFG, SVC, WorkloadSchedule(), 3600)
    assert len(trace) == 3600
    assert set(trace["total_pods"]) == {3} and set(trace["total_nodes"]) == {4}
    assert set(trace["response_time"]) == {SVC.base_latency}
    assert trace.actions == []


def test_flat_ddos_reaches_fixed_point():
    sched = WorkloadSchedule(WorkloadKind.FLAT_DDOS, 30, 20)
    trace = run_simulation(CFG, SVC, sched, 3600)
    fixed, _ = oracles.iterate_fixed_point(630, 3, CFG.pod_capacity_rps, CFG.pod_burst_limit,
                                           CFG.u_target)
    assert trace["ready_pods"][-1] == fixed == 63
    pods = trace["total_pods"]
    assert (np.diff(pods) >= 0).all()


def test_yoyo_dynamics_follow_controller_delays():
    sched = WorkloadSchedule(WorkloadKind.YOYO, 30, 20, 600, 1200, 2)
    trace = run_simulation(CFG, SVC, sched, 3600)
    first_up = min(a.t for a in trace.actions if a.kind == "create_pods")
    assert first_up == CFG.i_p_up
    first_node = min(e.t for e in trace.events if e.kind == "node_ready")
    assert first_node == first_up + CFG.w_n_up
    down = [a for a in trace.actions if a.kind == "terminate_pods"]
    assert down[0].t == 600 + CFG.i_p_down
    assert trace["total_pods"][-1] == 3 and trace["total_nodes"][-1] == 4


def test_trace_round_trips_through_csv(tmp_path):
    sched = WorkloadSchedule(WorkloadKind.YOYO, 30, 5, 300, 600, 1)
    trace = run_simulation(CFG, SVC, sched, 900)
    trace.to_csv(tmp_path / "t.csv")
    back = Trace.from_csv(tmp_path / "t.csv")
    for c in TRACE_COLUMNS:
        assert np.allclose(back[c], trace[c], atol=1e-6)
    trace.to_jsonl(tmp_path / "t.jsonl")
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 900


def test_same_seed_same_trace_different_seed_different_noise():
    from kubeyoyo.workload import Jitter
    sched = WorkloadSchedule(WorkloadKind.FLAT_DDOS, 30, 3, jitter=Jitter("random"))
    a = run_simulation(CFG, SVC, sched, 600, seed=5)
    b = run_simulation(CFG, SVC, sched, 600, seed=5)
    c = run_simulation(CFG, SVC, sched, 600, seed=6)
    assert a.csv_text() == b.csv_text()
    assert a.csv_text() != c.csv_text()


def test_rescheduling_errors_only_when_enabled():
    cfg = ClusterConfig(pin_initial_nodes=False, initial_pods_Np=12)
    sched = WorkloadSchedule(WorkloadKind.YOYO, 120, 20, 600, 1200, 1)
    quiet = run_simulation(cfg, SVC, sched, 1800)
    noisy = run_simulation(cfg, ServiceModelConfig(model_rescheduling_errors=True), sched, 1800)
    assert quiet["errors"].sum() == 0
    removed = {e.t for e in noisy.events if e.kind == "node_removed"}
    assert removed
    assert set(np.flatnonzero(noisy["errors"])) <= removed
    assert noisy["errors"].sum() > 0


def test_attack_window():
    yoyo = WorkloadSchedule(WorkloadKind.YOYO, 30, 20, 600, 1200, 3)
    assert attack_window(yoyo, 5400) == (0, 5400)
    assert attack_window(WorkloadSchedule(WorkloadKind.YOYO, 30, 20, 600, 1200, 1), 5400) == (0, 1800)
    assert attack_window(WorkloadSchedule(WorkloadKind.FLAT_DDOS), 100) == (0, 100)


def test_invalid_duration_rejected():
    with pytest.raises(ConfigError):
        run_simulation(CFG, SVC, WorkloadSchedule(), 0)
