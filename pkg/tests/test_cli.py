import csv
import json
import shutil
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from tel_lab.cli import main, write_atomic
from tel_lab.dataplane import FailureEvent, SimConfig
from tel_lab.dla import FlowDemand
from tel_lab.scenario import LinkDefaults, RandomDemands, RandomFailures, Scenario, ScenarioError, SolverSettings

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def write_scenario(tmp_path, **overrides):
    d = json.loads((SCEN / "simple.json").read_text())
    d.update(overrides)
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(d))
    return p


# -- scenario file -------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(p.name for p in SCEN.glob("*.json")))
def test_shipped_scenarios_round_trip(name):
    sc = Scenario.load(SCEN / name)
    assert Scenario.from_json(sc.to_json(), sc.base_dir) == sc


@given(
    st.integers(1, 50),
    st.integers(0, 2**31),
    st.floats(1e3, 1e8),
    st.lists(st.tuples(st.sampled_from(["S1", "S2", "S3"]), st.floats(0, 9000)), max_size=3),
    st.floats(0.01, 1.0),
    st.integers(1, 5),
)
def test_scenario_round_trip_property(k, seed, bw, fails, a, replicas):
    sc = Scenario(
        topology="simple",
        links=LinkDefaults(bw, 2.0, 0.5),
        random_demands=RandomDemands(k, seed, rate=1e5, size=4500.0, start_window=100.0),
        solver=SolverSettings(iterations=7, seed=seed, reward_a=a),
        failures=[FailureEvent((n, "S5"), t) for n, t in fails],
        random_failures=RandomFailures(1, 500.0, seed),
        sim=SimConfig(duration=4000.0, tick=1.0),
        replicas=replicas,
    )
    once = Scenario.from_json(sc.to_json())
    assert once == sc
    assert Scenario.from_json(once.to_json()) == once


def test_zero_demands_rejected():
    d = json.loads((SCEN / "goodnet.json").read_text())
    d["random_demands"]["count"] = 0
    with pytest.raises(ScenarioError):
        Scenario.from_dict(d, str(SCEN))


def test_too_many_demands_rejected():
    sc = Scenario(topology="simple", random_demands=RandomDemands(3))
    with pytest.raises(ScenarioError, match="distinct host pairs"):
        sc.build_demands(sc.build_graph())


def test_unknown_key_rejected():
    with pytest.raises(ScenarioError):
        Scenario.from_dict({"demandz": []})


def test_missing_topology_file(tmp_path):
    p = write_scenario(tmp_path, topology="nope.graphml")
    assert run("solve", "--scenario", p, "--out", tmp_path / "o") == 1


# -- subcommands ---------------------------------------------------------------


def test_solve_simple(tmp_path):
    assert run("solve", "--scenario", SCEN / "simple.json", "--out", tmp_path) == 0
    (plan,) = json.loads((tmp_path / "plans.json").read_text())["plans"]
    assert plan["primary"]["nodes"] == ["H1", "S1", "S2", "S5", "H2"]
    assert plan["backup"]["nodes"] == ["H1", "S1", "S4", "S5", "H2"]
    assert {"demand", "primary", "backup", "log_size"} <= set(plan)


@pytest.mark.parametrize("name,k", [("goodnet", 25), ("attmpls", 35)])
def test_solve_table_scenarios(tmp_path, name, k):
    assert run("solve", "--scenario", SCEN / f"{name}.json", "--out", tmp_path) == 0
    plans = json.loads((tmp_path / "plans.json").read_text())["plans"]
    assert len(plans) == k and all(plans)


def test_solve_infeasible_exit_code(tmp_path):
    demand = {"src": "H1", "dst": "H2", "rate": 50e6}
    p = write_scenario(tmp_path, demands=[demand])
    assert run("solve", "--scenario", p, "--out", tmp_path / "o") == 2
    data = json.loads((tmp_path / "o" / "plans.json").read_text())
    assert data["infeasible"] == [0]


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        run("frobnicate")
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run("solve")
    assert e.value.code == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("solve", "--scenario", bad) == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_simulate_simple(tmp_path):
    assert run("simulate", "--scenario", SCEN / "simple.json", "--out", tmp_path) == 0
    thr = rows(tmp_path / "throughput.csv")
    assert {r["mode"] for r in thr} == {"tel", "baseline"}
    times = sorted({float(r["time_ms"]) for r in thr})
    assert times[0] == 0 and times[-1] == 9900 and len(times) == 100
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["modes"]["tel"]["mean_recovery_ms"] == 50.0
    assert summary["modes"]["baseline"]["mean_recovery_ms"] == 1050.0


def test_simulate_without_failures_modes_agree(tmp_path):
    p = write_scenario(tmp_path, failures=[])
    assert run("simulate", "--scenario", p, "--out", tmp_path / "o") == 0
    thr = rows(tmp_path / "o" / "throughput.csv")
    by_mode = {m: [(r["time_ms"], r["bps"]) for r in thr if r["mode"] == m] for m in ("tel", "baseline")}
    assert by_mode["tel"] == by_mode["baseline"]


def test_simulate_replicas_reproduce(tmp_path):
    args = ["simulate", "--scenario", SCEN / "goodnet.json", "--replicas", 10, "--seed", 7, "--mode", "tel"]
    assert run(*args, "--out", tmp_path / "a") in (0, 2)
    assert run(*args, "--out", tmp_path / "b") in (0, 2)
    a = (tmp_path / "a" / "summary.json").read_text()
    assert a == (tmp_path / "b" / "summary.json").read_text()
    assert json.loads(a)["replicas"] == 10


def test_simulate_reuses_plans(tmp_path):
    run("solve", "--scenario", SCEN / "simple.json", "--out", tmp_path)
    assert run("simulate", "--scenario", SCEN / "simple.json", "--plans", tmp_path / "plans.json",
               "--mode", "tel", "--out", tmp_path) == 0
    assert {r["mode"] for r in rows(tmp_path / "throughput.csv")} == {"tel"}


def test_rules_simple(tmp_path):
    assert run("rules", "--scenario", SCEN / "simple.json", "--out", tmp_path) == 0
    entries = [json.loads(x) for x in (tmp_path / "rules.jsonl").read_text().splitlines()]
    s1 = [e for e in entries if e["switch"] == "S1" and e["table"] == 2]
    assert sorted(e["match"]["path_status"] for e in s1) == [0, 1]
    mem = rows(tmp_path / "memory.csv")
    assert {r["switch"] for r in mem} == {"S1", "S2", "S3", "S4", "S5"}
    assert json.loads((tmp_path / "registers.json").read_text())[0]["switch"] == "S1"


def test_rules_without_backup(tmp_path):
    # a chain leaves no alternative path
    gml = tmp_path / "chain.graphml"
    gml.write_text(
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns"><graph>'
        '<node id="a"/><node id="b"/><node id="c"/>'
        '<edge source="a" target="b"/><edge source="b" target="c"/></graph></graphml>'
    )
    p = write_scenario(
        tmp_path, topology=str(gml), failures=[],
        demands=[{"src": "ha", "dst": "hc", "rate": 1e6}],
    )
    assert run("rules", "--scenario", p, "--out", tmp_path / "o") == 0
    entries = [json.loads(x) for x in (tmp_path / "o" / "rules.jsonl").read_text().splitlines()]
    assert entries and all(e["match"].get("path_status", 0) == 0 for e in entries)


def test_rules_128_plans_use_7_bits(tmp_path):
    d = json.loads((SCEN / "goodnet.json").read_text())
    d["random_demands"] = {"count": 128, "seed": 0, "rate": 1e3}
    d["solver"]["iterations"] = 10
    d["random_failures"] = None
    p = tmp_path / "s.json"
    shutil.copy(ROOT / "data" / "topologyzoo" / "Goodnet.graphml", tmp_path / "Goodnet.graphml")
    d["topology"] = "Goodnet.graphml"
    p.write_text(json.dumps(d))
    assert run("rules", "--scenario", p, "--out", tmp_path / "o") == 0
    entries = [json.loads(x) for x in (tmp_path / "o" / "rules.jsonl").read_text().splitlines()]
    widths = {e["action"]["width"] for e in entries if e["table"] == 1}
    assert widths == {7}
    assert {r["base_bits"] for r in rows(tmp_path / "o" / "memory.csv")} == {"8"}


def test_validate(tmp_path):
    assert run("validate", "--scenario", SCEN / "goodnet.json", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "violations.json").read_text()) == []


def test_validate_reports_violations(tmp_path):
    run("solve", "--scenario", SCEN / "simple.json", "--out", tmp_path)
    data = json.loads((tmp_path / "plans.json").read_text())
    data["plans"][0]["demand"]["rate"] = 99e6
    (tmp_path / "plans.json").write_text(json.dumps(data))
    assert run("validate", "--scenario", SCEN / "simple.json", "--plans", tmp_path / "plans.json",
               "--out", tmp_path) == 3
    found = json.loads((tmp_path / "violations.json").read_text())
    assert {v["constraint"] for v in found} == {"link_capacity"}


def test_hops_single_edge_and_bad_file(tmp_path):
    topo = tmp_path / "topos"
    topo.mkdir()
    (topo / "edge.graphml").write_text(
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns"><graph>'
        '<node id="a"/><node id="b"/><edge source="a" target="b"/></graph></graphml>'
    )
    (topo / "broken.graphml").write_text("<graphml><graph>")
    assert run("hops", "--topology-dir", topo, "--min-links", 1, "--out", tmp_path / "o") == 0
    (row,) = rows(tmp_path / "o" / "hops.csv")
    assert row["topology"] == "edge"
    assert float(row["tel_primary"]) == float(row["baseline"]) == 1.0
    assert row["tel_backup"] == ""
    warnings = json.loads((tmp_path / "o" / "warnings.json").read_text())
    assert any("broken.graphml" in w for w in warnings)


def test_hops_missing_dir(tmp_path):
    assert run("hops", "--topology-dir", tmp_path / "none") == 1


def test_write_atomic_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.txt"
    write_atomic(target, "old")

    def boom(*a):
        raise OSError("disk full")

    monkeypatch.setattr("tel_lab.cli.os.replace", boom)
    with pytest.raises(OSError):
        write_atomic(target, "new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
