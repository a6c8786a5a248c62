import importlib.resources
import os

import numpy as np
import pytest
import yaml

from sweepsim.cli import main
from sweepsim.errors import ScenarioError
from sweepsim.geometry import Box, MovingHalfspace
from sweepsim.runner import run, run_file, run_suite
from sweepsim.scenario import load_scenario, parse_scenario

SCEN_DIR = importlib.resources.files("sweepsim") / "scenarios"

MINIMAL_SWEEP = {
    "name": "mini",
    "experiment": "sweep",
    "seed": 1,
    "family": {"kind": "halfspace", "normal": [1.0, 0.0],
               "offset": {"poly": [0.0, 1.0]}},
    "x0": [0.0, 0.0],
    "t0": 0.0,
    "t_end": 0.5,
    "h": 0.05,
}


def test_minimal_sweep_gets_documented_defaults():
    scn = parse_scenario(dict(MINIMAL_SWEEP))
    assert scn.samples == 64
    assert isinstance(scn.region, Box)             # derived from family anchors
    assert isinstance(scn.family, MovingHalfspace)
    assert scn.checks == {}


def test_missing_x0_is_a_semantic_error():
    data = dict(MINIMAL_SWEEP)
    del data["x0"]
    with pytest.raises(ScenarioError, match="x0 required"):
        parse_scenario(data)


def test_seed_is_mandatory():
    data = dict(MINIMAL_SWEEP)
    del data["seed"]
    with pytest.raises(ScenarioError, match="seed required"):
        parse_scenario(data)


def test_non_halving_h_list_rejected():
    data = dict(MINIMAL_SWEEP)
    data["experiment"] = "length_study"
    del data["h"]
    data["h_list"] = [0.01, 0.006, 0.003]
    with pytest.raises(ScenarioError, match="halve"):
        parse_scenario(data)


def test_unknown_keys_rejected():
    data = dict(MINIMAL_SWEEP)
    data["surprise"] = 1
    with pytest.raises(ScenarioError, match="unknown key 'surprise'"):
        parse_scenario(data)
    data = dict(MINIMAL_SWEEP)
    data["family"] = {"kind": "halfspace", "normal": [1.0, 0.0],
                      "offset": 0.0, "bogus": True}
    with pytest.raises(ScenarioError, match="family"):
        parse_scenario(data)


def test_parse_error_reports_line_and_column(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nexperiment: sweep\n  seed: [1\n")
    with pytest.raises(ScenarioError, match=r"line \d+"):
        load_scenario(bad)


def test_dimension_mismatch_between_x0_and_family():
    data = dict(MINIMAL_SWEEP)
    data["x0"] = [0.0, 0.0, 0.0]
    with pytest.raises(ScenarioError, match="x0"):
        parse_scenario(data)


def test_monotone_requires_alpha():
    data = {
        "name": "m", "experiment": "monotone", "seed": 1,
        "family": MINIMAL_SWEEP["family"],
        "field": {"components": [
            {"dimension": 2, "terms": [[2.0, [1, 0]]]},
            {"dimension": 2, "terms": [[2.0, [0, 1]]]}]},
        "x0": [0.0, 0.0], "t0": 0.0, "t_end": 0.5, "h": 0.05,
    }
    with pytest.raises(ScenarioError, match="alpha"):
        parse_scenario(data)


# ---------------------------------------------------------------------------
# Runner behavior
# ---------------------------------------------------------------------------

def _write(tmp_path, name, data):
    path = tmp_path / f"{name}.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_run_writes_report_and_artifacts(tmp_path):
    data = dict(MINIMAL_SWEEP)
    data["checks"] = {"speed_bound": {"slack": 0.05}, "no_breakpoints": {}}
    path = _write(tmp_path, "mini", data)
    rep = run_file(path, output_root=str(tmp_path / "out"))
    assert rep.overall == "PASS"
    assert os.path.exists(rep.artifacts["trajectory"])
    assert os.path.exists(rep.artifacts["report"])
    text = open(rep.artifacts["report"]).read()
    assert "status: PASS" in text
    assert "speed_bound: PASS" in text


def test_run_turns_module_errors_into_fail(tmp_path):
    data = dict(MINIMAL_SWEEP)
    # ball radius goes negative immediately: empty swept set
    data["family"] = {"kind": "ball", "center": [0.0, 0.0],
                      "radius": {"poly": [-1.0]}}
    path = _write(tmp_path, "mini", data)
    rep = run_file(path, output_root=str(tmp_path / "out"))
    assert rep.overall == "FAIL"
    assert "run" in rep.statuses or "integration" in rep.statuses


def test_csv_outputs_byte_identical_across_runs(tmp_path):
    data = dict(MINIMAL_SWEEP)
    data["checks"] = {"speed_bound": {}}
    path = _write(tmp_path, "mini", data)
    rep1 = run_file(path, output_root=str(tmp_path / "a"))
    rep2 = run_file(path, output_root=str(tmp_path / "b"))
    b1 = open(rep1.artifacts["trajectory"], "rb").read()
    b2 = open(rep2.artifacts["trajectory"], "rb").read()
    assert b1 == b2
    # reports agree up to the artifact paths (different output roots)
    r1 = open(rep1.artifacts["report"]).read().split("artifacts:")[0]
    r2 = open(rep2.artifacts["report"]).read().split("artifacts:")[0]
    assert r1 == r2


def test_run_suite_parallel_deterministic(tmp_path):
    for i in range(3):
        data = dict(MINIMAL_SWEEP)
        data["name"] = f"s{i}"
        data["seed"] = i + 1
        data["checks"] = {"no_breakpoints": {}}
        _write(tmp_path, f"s{i}", data)
    reports1, agg1 = run_suite(tmp_path, jobs=3, output_root=str(tmp_path / "o1"))
    reports2, agg2 = run_suite(tmp_path, jobs=1, output_root=str(tmp_path / "o2"))
    assert [r.overall for r in reports1] == ["PASS"] * 3
    for a, b in zip(reports1, reports2):
        ta = open(a.artifacts["trajectory"], "rb").read()
        tb = open(b.artifacts["trajectory"], "rb").read()
        assert ta == tb
    assert "passed 3 of 3" in open(agg1).read()


def test_run_suite_empty_directory(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    reports, agg = run_suite(empty, output_root=str(tmp_path / "out"))
    assert reports == []
    assert "no scenario files" in open(agg).read()


def test_run_suite_duplicate_names_rejected(tmp_path):
    _write(tmp_path, "a", dict(MINIMAL_SWEEP))
    _write(tmp_path, "b", dict(MINIMAL_SWEEP))   # same scenario name inside
    with pytest.raises(ScenarioError, match="duplicate"):
        run_suite(tmp_path, output_root=str(tmp_path / "out"))


def test_output_root_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SWEEPSIM_OUTPUT_ROOT", str(tmp_path / "env_root"))
    path = _write(tmp_path, "mini", dict(MINIMAL_SWEEP))
    rep = run_file(path)
    assert str(tmp_path / "env_root") in rep.artifacts["report"]


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------

def test_cli_run_exit_codes(tmp_path, capsys):
    ok = _write(tmp_path, "ok", {**MINIMAL_SWEEP,
                                 "checks": {"no_breakpoints": {}}})
    code = main(["run", str(ok), "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "status: PASS" in out

    failing = dict(MINIMAL_SWEEP)
    failing["name"] = "failing"
    # impossible tolerance: speed 1 vs required max ratio way below 1
    failing["checks"] = {"lipschitz_steps": {"L": 0.1, "slack": 0.0}}
    bad = _write(tmp_path, "failing", failing)
    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == 1


def test_cli_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("not: [valid\n")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_cli_kind_specific_commands_validate_experiment(tmp_path):
    path = _write(tmp_path, "mini", dict(MINIMAL_SWEEP))
    assert main(["talweg", str(path)]) == 2


def test_cli_suite(tmp_path):
    data = dict(MINIMAL_SWEEP)
    data["checks"] = {"no_breakpoints": {}}
    _write(tmp_path, "mini", data)
    assert main(["suite", str(tmp_path), "--out", str(tmp_path / "out")]) == 0


def test_bundled_scenarios_parse():
    names = sorted(p.name for p in SCEN_DIR.iterdir() if p.name.endswith(".yaml"))
    assert len(names) == 8
    for name in names:
        scn = load_scenario(str(SCEN_DIR / name))
        assert scn.seed is not None
