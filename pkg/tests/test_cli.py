import json

import pytest

from diffincl.cli import main
from diffincl.models import EconParams


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_simulate_segment_writes_files(tmp_path):
    assert run(tmp_path, "simulate", "--model", "u-segment", "--x0", "0.25,0", "--window", "10") == 0
    doc = json.loads((tmp_path / "solution.json").read_text())
    assert doc["window"] == [-10.0, 10.0] and doc["seed"] == 0
    assert all((tmp_path / f).exists() for f in doc["segments"])
    svg = (tmp_path / "phase_portrait.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_simulate_econ_embeds_cycle_phases(tmp_path):
    params = tmp_path / "params.json"
    params.write_text(json.dumps(EconParams.default().to_json()))
    assert run(tmp_path, "simulate", "--model", "islm-qyml", "--params", str(params)) == 0
    rep = json.loads((tmp_path / "cycle_phases.json").read_text())
    assert rep["alternating"] and len(rep["events"]) >= 6
    svg = (tmp_path / "phase_portrait.svg").read_text()
    assert "trough" in svg and "peak" in svg


@pytest.mark.parametrize("argv", [
    ["simulate", "--model", "unknown"],
    ["simulate", "--model", "u-segment", "--x0", "5,5"],
    ["simulate", "--model", "u-segment", "--params", "missing.json"],
    ["analyze", "--ensemble", "missing/manifest.json", "--entropy"],
    ["analyze", "--ensemble", "rbar"],
    ["check", "--model", "u-segment"],
    ["reproduce", "nosuch"],
    ["simulate"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_analyze_rbar_entropy_zero(tmp_path):
    assert run(tmp_path, "analyze", "--ensemble", "rbar", "--entropy") == 0
    rep = json.loads((tmp_path / "entropy.json").read_text())
    assert rep["estimate"] == 0.0
    assert (tmp_path / "distance_matrix.csv").exists() and (tmp_path / "spanning.svg").exists()


def test_analyze_itineraries_entropy_positive(tmp_path):
    assert run(tmp_path, "analyze", "--ensemble", "itineraries-n4", "--entropy") == 0
    rep = json.loads((tmp_path / "entropy.json").read_text())
    assert rep["estimate"] > 0


def test_analyze_rhat_not_sensitive(tmp_path):
    assert run(tmp_path, "analyze", "--ensemble", "rhat", "--devaney") == 0
    assert json.loads((tmp_path / "devaney.json").read_text())["sensitive"] is False


def test_analyze_accepts_manifest(tmp_path):
    from diffincl import io, models
    manifest = io.write_ensemble(models.get_ensemble("stilde"), tmp_path / "ens")
    assert run(tmp_path / "o", "analyze", "--ensemble", str(manifest), "--omega") == 0
    rep = json.loads((tmp_path / "o" / "omega.json").read_text())
    assert len(rep["members"]) == 16


def test_check_segment_rs1_rs2(tmp_path):
    assert run(tmp_path, "check", "--model", "u-segment", "--rs1", "--rs2") == 0
    assert json.loads((tmp_path / "rs1.json").read_text())["pass"]
    assert json.loads((tmp_path / "rs2.json").read_text())["pass"]


@pytest.mark.slow
def test_check_lens_rs1_bv3(tmp_path):
    assert run(tmp_path, "check", "--model", "lens-w", "--rs1", "--bv3") == 0


def test_check_bv3_planted_restriction(tmp_path):
    assert run(tmp_path / "a", "check", "--model", "u-segment", "--bv3", "--restrict-switching", "none") == 0
    assert run(tmp_path / "b", "check", "--model", "u-segment", "--bv3", "--restrict-switching", "ensemble") == 1
    assert not json.loads((tmp_path / "b" / "bv3.json").read_text())["pass"]


def test_reproduce_lemma36(tmp_path):
    assert run(tmp_path, "reproduce", "lemma36") == 0
    rep = json.loads((tmp_path / "lemma36_report.json").read_text())
    assert [c["criterion"] for c in rep["criteria"]] == ["C7"] and rep["criteria"][0]["pass"]


def test_reports_are_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert run(tmp_path / sub, "check", "--model", "u-segment", "--rs1", "--seed", "3") == 0
        assert run(tmp_path / sub, "analyze", "--ensemble", "stilde", "--entropy", "--s", "1,2") == 0
        assert run(tmp_path / sub, "simulate", "--model", "lens-w", "--window", "5") == 0
    for name in ("rs1.json", "entropy.json", "distance_matrix.csv", "solution.json", "phase_portrait.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    assert json.loads((tmp_path / "a" / "rs1.json").read_text())["seed"] == 3
