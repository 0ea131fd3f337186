import pytest

from kubeyoyo.config import (Scenario, ScenarioError, builtin_names, load_scenario,
                             parse_scenario, scenario_to_dict)
from kubeyoyo.workload import Jitter, WorkloadKind

GOOD = """\
schema_version: 1
name: demo
seed: 3
cluster:
  i_p_up: 2m
  w_n_up: 90s
  max_nodes: 20
schedule:
  kind: yoyo
  power_k: 15
  t_on: 7m
  t_off: 14m
  cycles_n: 3
  jitter: {random: [0.9, 1.1]}
"""


def test_parse_full_scenario():
    s = parse_scenario(GOOD)
    assert s.name == "demo" and s.seed == 3
    assert s.cluster.i_p_up == 120 and s.cluster.w_n_up == 90 and s.cluster.max_nodes == 20
    assert s.schedule.kind is WorkloadKind.YOYO
    assert (s.schedule.t_on, s.schedule.t_off) == (420, 840)
    assert s.schedule.jitter == Jitter("random", lo=0.9, hi=1.1)
    assert s.duration == 3 * 1260


def test_defaults_fill_missing_sections():
    s = parse_scenario("schema_version: 1\n")
    assert s == Scenario(name="scenario")


@pytest.mark.parametrize("text,line,fragment", [
    ("schema_version: 2\n", 1, "schema_version"),
    ("schema_version: 1\ncluster:\n  bogus: 1\n", 3, "unknown key"),
    ("schema_version: 1\ncluster:\n  i_p_up: -5\n", 3, "i_p_up must be > 0"),
    ("schema_version: 1\nschedule:\n  t_on: soon\n", 3, "invalid duration"),
    ("schema_version: 1\nschedule:\n  kind: burst\n", 3, "schedule.kind"),
    ("schema_version: 1\nwhatever: 1\n", 2, "unknown key"),
    ("schema_version: 1\nduration: 10m\nschedule:\n  kind: yoyo\n", 2, "full YoYo cycle"),
    ("schema_version: 1\ncluster: [1, 2\n", 3, "YAML syntax"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text, "x.yaml")
    assert err.value.line == line
    assert fragment in str(err.value)
    assert str(err.value).startswith(f"x.yaml:{line}:")


def test_builtin_library():
    assert builtin_names() == ["classic_ddos_k20", "yoyo_k20", "yoyo_vm_group"]
    flat = load_scenario("builtin:classic_ddos_k20")
    yoyo = load_scenario("builtin:yoyo_k20")
    vm = load_scenario("builtin:yoyo_vm_group")
    assert flat.cluster == yoyo.cluster and flat.service == yoyo.service
    assert flat.schedule.kind is WorkloadKind.FLAT_DDOS and flat.schedule.power_k == 20
    assert (yoyo.schedule.t_on, yoyo.schedule.t_off) == (600, 1200)
    assert vm.cluster.pods_per_node_R == 1 and vm.cluster.max_nodes == 24
    with pytest.raises(ScenarioError, match="no builtin"):
        load_scenario("builtin:nope")


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.yaml")


def test_plain_dict_form():
    d = scenario_to_dict(parse_scenario(GOOD))
    assert d["schema_version"] == 1
    assert d["schedule"]["kind"] == "yoyo"
    assert d["cluster"]["i_p_up"] == 120
