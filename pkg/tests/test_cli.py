import json
import subprocess
import sys
from pathlib import Path

import pytest

from palmtail.cli import load_report, main
from palmtail.errors import ScenarioError
from palmtail.scenario import load_scenario, parse_scenario

SCEN = Path(__file__).resolve().parent.parent / "scenarios"


def run(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_verify_e1_all_exact(tmp_path):
    code, doc, _ = run(["verify", str(SCEN / "e1.json")], tmp_path)
    assert code == 0
    assert doc["summary"]["failed"] == 0 and doc["summary"]["passed"] > 0
    names = {r["identity"] for r in doc["reports"]}
    for want in ("refined_campbell", "mecke", "inversion_roundtrip", "exchange", "allocation",
                 "space_shift", "mecke7", "construction_agreement", "palm1", "extremal_index"):
        assert want in names
    keys = [(r["identity"], r["function"]) for r in doc["reports"]]
    assert keys == sorted(keys)


def test_verify_measure_source(tmp_path):
    code, doc, _ = run(["verify", str(SCEN / "e1_measure.json")], tmp_path)
    assert code == 0 and doc["summary"]["failed"] == 0


def test_verify_negative_control(tmp_path):
    code, doc, _ = run(["verify", str(SCEN / "negative_control.json")], tmp_path)
    assert code == 1
    failed = {r["identity"] for r in doc["failures"]}
    assert {"mecke", "space_shift"} <= failed
    cx = [r for r in doc["failures"] if r["function"] == "match:[0.5, 1.0]@s=[1]"]
    assert cx and cx[0]["lhs"] == 1.0 and cx[0]["rhs"] == 0.0


def test_malformed_scenarios(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"group": {"kind": "cyclic", "shape": [2]},\n "alpha": }')
    assert main(["verify", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    bad.write_text(json.dumps({"group": {"kind": "cyclic", "shape": [2]}, "alpha": 1}))
    assert main(["verify", str(bad)]) == 2
    bad.write_text(json.dumps({"group": {"kind": "cyclic", "shape": [2]}, "alpha": -1,
                               "spectralLaw": {"atoms": [{"p": 1, "field": [1, 1]}]}}))
    assert main(["verify", str(bad)]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.json")]) == 2


def test_parse_scenario_errors():
    base = {"group": {"kind": "cyclic", "shape": [2]}, "alpha": 1,
            "spectralLaw": {"atoms": [{"p": 1, "field": [1, 0.5]}]}}
    parse_scenario(base)
    with pytest.raises(ScenarioError, match="unknown keys"):
        parse_scenario({**base, "bogus": 1})
    with pytest.raises(ScenarioError, match="exactly one"):
        parse_scenario({**base, "rayMeasure": {"rays": []}})
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**base, "anchor": {"kind": "constant", "site": 5}})
    assert ei.value.where == "anchor.site"
    with pytest.raises(ScenarioError):
        parse_scenario({**base, "spectralLaw": {"atoms": [{"p": 1, "field": [2, 1]}]}})


def test_construct_byte_identical(tmp_path):
    e1 = str(SCEN / "e1.json")
    outs = {}
    for via in ("anchor", "weight", "H"):
        code, doc, _ = run(["construct", e1, "--via", via], tmp_path, f"{via}.json")
        assert code == 0
        assert doc["validation"] == {"exceedance_mass": 1.0, "homogeneous": True,
                                     "palm_roundtrip": True, "stationary": True}
        outs[via] = json.dumps(doc["measure"], sort_keys=True)
    assert outs["anchor"] == outs["weight"] == outs["H"]


def test_construct_negative_control(tmp_path):
    code, doc, _ = run(["construct", str(SCEN / "negative_control.json")], tmp_path)
    assert code == 1
    assert doc["error"] == "SpaceShiftFailed" and doc["counterexample"]["pass"] is False


def test_index(tmp_path):
    code, doc, _ = run(["index", str(SCEN / "e1.json")], tmp_path)
    assert code == 0 and doc["verdict"] == "agree"
    for k in ("theta_direct", "theta_kappa", "theta_anchor"):
        assert doc[k] == pytest.approx(2 / 3, abs=1e-12)
    code, doc, _ = run(["index", str(SCEN / "unit_z4.json")], tmp_path, "u.json")
    assert code == 0
    assert doc["theta_direct"] == pytest.approx(0.25) and doc["theta_kappa"] == pytest.approx(0.25)


def test_index_monte_carlo(tmp_path):
    code, doc, _ = run(["index", str(SCEN / "window_tilted.json")], tmp_path)
    assert code == 0 and doc["verdict"] == "consistent"
    lo, hi = doc["ci_direct"]
    assert lo <= doc["theta_direct"]["mean"] <= hi


def test_sample(tmp_path):
    e1 = str(SCEN / "e1.json")
    a = run(["sample", e1, "-n", "3", "--seed", "4"], tmp_path, "a.json")[2].read_bytes()
    b = run(["sample", e1, "-n", "3", "--seed", "4"], tmp_path, "b.json")[2].read_bytes()
    assert a == b
    code, doc, _ = run(["sample", e1, "-n", "10000", "--seed", "4"], tmp_path, "c.json")
    assert code == 0 and len(doc["fields"]) == 10000
    assert all(f[0] > 1 for f in doc["fields"])
    freq = sum(1 for f in doc["fields"] if f[1] < f[0]) / 10000
    se = (freq * (1 - freq) / 10000) ** 0.5
    assert abs(freq - 2 / 3) <= 3 * se


def test_verify_mc(tmp_path):
    code, doc, _ = run(["verify", str(SCEN / "e1.json"), "--mode", "mc", "--suite", "spectral"],
                       tmp_path)
    assert code == 0
    assert any(r["identity"] == "space_shift:mc_vs_exact" for r in doc["reports"])
    code, doc, _ = run(["verify", str(SCEN / "window_untilted.json"), "--mode", "mc",
                        "--suite", "spectral"], tmp_path, "u.json")
    assert code == 1


def test_report_round_trip(tmp_path):
    code, doc, out = run(["verify", str(SCEN / "e1.json"), "--suite", "palm"], tmp_path)
    back = load_report(out)
    assert back["summary"] == doc["summary"]
    sc = parse_scenario(back["scenario"])
    assert sc.alpha == 1.0 and sc.source == "spectralLaw"


def test_timing_is_opt_in(tmp_path):
    _, doc, _ = run(["verify", str(SCEN / "e1.json"), "--suite", "anchor"], tmp_path)
    assert "timing" not in doc
    _, doc, _ = run(["verify", str(SCEN / "e1.json"), "--suite", "anchor", "--timing"], tmp_path,
                    "t.json")
    assert doc["timing"]["seconds"] >= 0


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "palmtail", "index", str(SCEN / "e1.json")],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert json.loads(p.stdout)["verdict"] == "agree"


def test_scenario_files_load():
    for f in SCEN.glob("*.json"):
        load_scenario(f)
