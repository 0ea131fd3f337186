import numpy as np
import pytest
from hypothesis import given, strategies as st

from kubeyoyo.damage import (PricingConfig, UndefinedMetric, attack_cost, billed_for_spans,
                             damage_report, economic_damage, fmt_ratio, mean_response,
                             performance_damage, potency, relative_damage)
from kubeyoyo.engine import TRACE_COLUMNS, Trace


def _trace(**cols):
    n = len(next(iter(cols.values())))
    full = {c: np.zeros(n) for c in TRACE_COLUMNS}
    full["t"] = np.arange(n)
    full["offered_rate"] = np.ones(n)
    full.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
    return Trace(full, duration=n)


def test_performance_damage():
    assert performance_damage(_trace(response_time=[20, 20, 20]), 20, (0, 3)) == 0
    assert performance_damage(_trace(response_time=[20, 120]), 20, (0, 2)) == 50


def test_mean_response_weights_by_requests():
    tr = _trace(response_time=[20, 120], offered_rate=[3, 1])
    assert mean_response(tr, (0, 2)) == pytest.approx(45)
    idle = _trace(response_time=[20, 120], offered_rate=[0, 0])
    assert mean_response(idle, (0, 2)) == 70


def test_economic_damage():
    assert economic_damage(_trace(total_nodes=[4, 4]), 4, (0, 2)) == 0
    assert economic_damage(_trace(total_nodes=[4, 24] * 5), 4, (0, 10)) == 10


def test_empty_window_is_an_error():
    tr = _trace(total_nodes=[4, 4])
    with pytest.raises(ValueError):
        economic_damage(tr, 4, (1, 1))
    with pytest.raises(ValueError):
        economic_damage(tr, 4, (0, 5))


def test_relative_damage_and_undefined_baseline():
    assert relative_damage(3, 3) == 1.0
    assert relative_damage(15, 3) == 5.0
    with pytest.raises(UndefinedMetric):
        relative_damage(10, 0)


def test_attack_cost():
    assert attack_cost(20, 600, 1800) == pytest.approx(20 / 3)
    assert attack_cost(20, 1800, 1800) == 20
    assert attack_cost(15, 420, 1260) == pytest.approx(5)
    with pytest.raises(ValueError):
        attack_cost(20, 0, 1800)


def test_potency():
    assert potency(5, 20 / 3) == pytest.approx(0.75)
    assert potency(7, 20) == pytest.approx(0.35)
    assert potency(4.2, 4.2) == 1.0
    with pytest.raises(UndefinedMetric):
        potency(1, 0)


def test_billing():
    p = PricingConfig(node_rate=0.01, min_billing=60, mgmt_fee=0)
    assert billed_for_spans([(0, 30)], 30, p) == pytest.approx(0.60)
    fee_only = PricingConfig(node_rate=0.01, mgmt_fee=0.10)
    assert billed_for_spans([], 7200, fee_only) == pytest.approx(0.20)


@given(st.lists(st.tuples(st.integers(0, 5000), st.integers(0, 5000)), max_size=20),
       st.integers(0, 5000))
def test_billing_monotone_in_node_lifetimes(spans, extra):
    spans = [(a, a + b) for a, b in spans]
    p = PricingConfig()
    longer = [(a, b + extra) for a, b in spans]
    assert billed_for_spans(longer, 3600, p) >= billed_for_spans(spans, 3600, p)
    assert billed_for_spans(spans + [(0, 1)], 3600, p) > billed_for_spans(spans, 3600, p)


def test_report_marks_zero_baselines_undefined():
    from kubeyoyo.workload import WorkloadKind, WorkloadSchedule
    steady = _trace(response_time=[20] * 4, total_nodes=[4] * 4)
    attack = _trace(response_time=[20, 60, 60, 20], total_nodes=[4, 8, 8, 4])
    sched = WorkloadSchedule(WorkloadKind.FLAT_DDOS, power_k=20)
    rep = damage_report(attack, steady, steady, sched, PricingConfig())
    assert rep.rd_p is None and rep.rd_e is None and rep.potency is None
    assert rep.d_p == 20 and rep.d_e == 2 and rep.cost == 20
    assert fmt_ratio(rep.rd_e) == "undefined"
    k1 = _trace(response_time=[20, 30, 30, 20], total_nodes=[4, 5, 5, 4])
    rep = damage_report(attack, k1, steady, sched, PricingConfig())
    assert rep.rd_p == pytest.approx(4) and rep.rd_e == pytest.approx(4)
    assert rep.potency == pytest.approx(0.2)
