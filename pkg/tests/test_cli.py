from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import pytest

from gromovdisc.cli import main
from gromovdisc.reporting import read_csv, schema_errors

ROOT = Path(__file__).resolve().parents[1]
DOCS = ROOT / "docs"


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def report(capsys, *argv):
    rc, out, err = run(capsys, *argv)
    doc = json.loads(out)
    assert schema_errors(doc, "run_report") == []
    return rc, doc


def test_corpus_list(capsys):
    rc, doc = report(capsys, "corpus", "list")
    assert rc == 0
    names = {f["name"] for f in doc["outputs"]["families"]}
    assert len(names) >= 3
    assert {"blaschke", "sphere-bubble", "ghost"} <= names


@pytest.mark.parametrize("target,expected", [("cp1", 0.5 * math.pi), ("unit_disc", math.pi)])
def test_energy_identity_disc(capsys, target, expected):
    rc, doc = report(capsys, "energy", "--map", "builtin:identity-disc", "--region", "whole", "--target", target)
    assert rc == 0
    assert doc["verdict"] == "holds"
    assert doc["outputs"]["energy"]["value"] == pytest.approx(expected, rel=1e-10)


def test_energy_regions(capsys):
    rc, doc = report(capsys, "energy", "--map", "family:sphere-bubble@10", "--region", "ball:0,1,0.5")
    assert rc == 0
    rc, doc = report(capsys, "energy", "--map", "builtin:identity-sphere", "--region", "annulus:0,0,1,2")
    # the annulus 1 < |z| < 2 carries pi (1/2 - 1/5)
    assert doc["outputs"]["energy"]["value"] == pytest.approx(0.3 * math.pi, rel=1e-10)


def test_energy_unconverged_exit_two(capsys):
    rc, doc = report(capsys, "energy", "--map", "family:sphere-bubble@1000", "--tol", "1e-14", "--max-cells", "8")
    assert rc == 2 and doc["verdict"] == "unconverged"


@pytest.mark.parametrize(
    "argv",
    [
        ["energy"],
        ["energy", "--map", "builtin:nope"],
        ["energy", "--map", "builtin:identity-disc", "--region", "ball:1,2"],
        ["energy", "--map", "family:blaschke"],
        ["ineq", "mean-value", "--point", "0,1", "--radius", "0.5"],
        ["ineq", "mean-value", "--map", "builtin:identity-disc", "--point", "zero", "--radius", "0.5"],
        ["nosuch"],
        ["energy", "--map", "builtin:identity-disc", "--tol", "-1"],
    ],
)
def test_usage_errors_exit_three(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == 3
    assert err


def test_stablemap_validate_example(capsys):
    rc, doc = report(capsys, "stablemap", "validate", "examples/blaschke_limit.json")
    assert rc == 0 and doc["verdict"] == "valid"
    rc, doc = report(capsys, "stablemap", "validate", str(DOCS / "examples" / "blaschke_limit.json"))
    assert rc == 0


def test_stablemap_energy_and_degree(capsys):
    path = str(DOCS / "examples" / "blaschke_limit.json")
    rc, doc = report(capsys, "stablemap", "energy", path)
    assert rc == 0
    assert doc["outputs"]["total"]["value"] == pytest.approx(2 * math.pi, rel=1e-8)
    rc, doc = report(capsys, "stablemap", "degree", path)
    assert rc == 0 and doc["outputs"]["degree"] == 2


def test_stablemap_invalid_exit_one(capsys, tmp_path):
    data = json.loads((DOCS / "examples" / "blaschke_negated.json").read_text())["tree"]
    p = tmp_path / "neg.json"
    p.write_text(json.dumps(data))
    rc, doc = report(capsys, "stablemap", "validate", str(p))
    assert rc == 1 and doc["verdict"] == "invalid"
    assert any(v["code"] == "matching" for v in doc["outputs"]["violations"])


def test_malformed_inputs_name_the_path(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc, _, err = run(capsys, "stablemap", "validate", str(bad))
    assert rc == 3 and str(bad) in err
    data = json.loads((DOCS / "examples" / "blaschke_limit.json").read_text())
    data["vertices"][1]["map"]["domain"] = "annulus"
    p = tmp_path / "schema.json"
    p.write_text(json.dumps(data))
    rc, _, err = run(capsys, "stablemap", "validate", str(p))
    assert rc == 3 and "$.vertices[1].map.domain" in err
    rc, _, err = run(capsys, "stablemap", "validate", str(tmp_path / "missing.json"))
    assert rc == 3 and "missing.json" in err


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tol": 1e-9, "seed": 3}))
    rc, doc = report(capsys, "energy", "--map", "builtin:identity-disc", "--config", str(cfg))
    assert rc == 0
    assert doc["config"]["tol"] == 1e-9 and doc["config"]["seed"] == 3
    assert schema_errors(doc["config"], "config") == []
    assert str(cfg) in doc["inputs"]
    cfg.write_text(json.dumps({"tol": 0}))
    rc, _, err = run(capsys, "energy", "--map", "builtin:identity-disc", "--config", str(cfg))
    assert rc == 3 and "$.tol" in err
    cfg.write_text(json.dumps({"ladder_factor": 1.0}))
    rc, _, _ = run(capsys, "energy", "--map", "builtin:identity-disc", "--config", str(cfg))
    assert rc == 3


def test_ineq_mean_value_verdicts(capsys):
    base = ["ineq", "mean-value", "--map", "builtin:identity-disc", "--point", "0,1", "--radius", "0.5"]
    rc, doc = report(capsys, *base, "--C", "1.0")
    assert rc == 0 and doc["verdict"] == "holds"
    rc, doc = report(capsys, *base, "--C", "0.01")
    assert rc == 1 and doc["verdict"] == "fails"


def test_ineq_isoperimetric(capsys, tmp_path):
    rc, doc = report(capsys, "ineq", "isoperimetric", "--curve", "semicircle:-1,1", "--c", str(1 / (2 * math.pi) * 1.001))
    assert rc == 0
    curve = tmp_path / "c.json"
    curve.write_text(json.dumps({"points": [[0, 0.5], [1, 1], [2, 0]]}))
    rc, doc = report(capsys, "ineq", "isoperimetric", "--curve", str(curve))
    assert rc == 3 and doc["verdict"] == "inadmissible"
    curve.write_text(json.dumps({"points": [[0, 0]]}))
    rc, _, err = run(capsys, "ineq", "isoperimetric", "--curve", str(curve))
    assert rc == 3 and "$.points" in err


def test_concentration_csv(capsys, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    rc, doc = report(
        capsys, "ineq", "concentration", "--map", "builtin:identity-sphere", "--center", "0,0",
        "--delta", "1e-12", "--eps", "0.5", "--csv", str(csv_path),
    )
    assert rc == 0
    raw = csv_path.read_bytes()
    assert b"\r\n" in raw
    header, rows = read_csv(raw.decode())
    assert header[:4] == ["T", "E_T", "bound", "converged"]
    assert len(rows) == len(doc["outputs"]["samples"])
    # floats survive the round trip exactly
    assert [r["E_T"] for r in rows] == [s["E_T"] for s in doc["outputs"]["samples"]]


def test_concentration_empty_sweep_header_only(capsys, tmp_path):
    csv_path = tmp_path / "empty.csv"
    rc, doc = report(
        capsys, "ineq", "concentration", "--family", "blaschke", "--nu", "1000", "--center", "0,0",
        "--delta", "1e-3", "--eps", "0.5", "--csv", str(csv_path),
    )
    assert rc == 2 and doc["verdict"] == "unconverged"
    text = csv_path.read_bytes().decode()
    assert text.count("\r\n") == 1 and text.startswith("T,")


def test_determinism_hash(capsys, tmp_path):
    argv = ["energy", "--map", "family:blaschke@100", "--region", "ball:0,0,0.3"]
    out = tmp_path / "r.json"
    digests = set()
    for _ in range(3):
        assert main([*argv, "--out", str(out)]) == 0
        digests.add(hashlib.sha256(out.read_bytes()).hexdigest())
    assert len(digests) == 1


def test_report_file_adds_wall_time(capsys, tmp_path):
    rp = tmp_path / "rep.json"
    rc, doc = report(capsys, "energy", "--map", "builtin:identity-disc", "--report", str(rp))
    full = json.loads(rp.read_text())
    assert "wall_time" not in doc
    assert full["wall_time"] >= 0
    assert schema_errors(full, "run_report") == []
    full.pop("wall_time")
    assert full == doc


def test_bubble_verify_negative_controls(capsys):
    ex = DOCS / "examples"
    rc, doc = report(capsys, "bubble", "verify", "--family", "blaschke", "--candidate", str(ex / "blaschke_candidate.json"))
    assert rc == 0 and doc["verdict"] == "accepted"
    for name in ("blaschke_displaced", "blaschke_negated"):
        rc, doc = report(capsys, "bubble", "verify", "--family", "builtin:blaschke", "--candidate", str(ex / f"{name}.json"))
        assert rc == 1 and doc["verdict"] == "rejected"


@pytest.mark.slow
def test_bubble_analyze(capsys, tmp_path):
    csv_path = tmp_path / "ladders.csv"
    rc, doc = report(capsys, "bubble", "analyze", "--family", "sphere-bubble", "--csv", str(csv_path))
    assert rc == 0
    assert schema_errors(doc["outputs"]["stablemap"], "stablemap") == []
    header, rows = read_csv(csv_path.read_bytes().decode())
    assert header == ["kind", "where", "nu", "value", "verdict"] and rows


def test_profile_estimate_seeded(capsys):
    rc, a = report(capsys, "profile", "estimate", "--points", "2")
    rc2, b = report(capsys, "profile", "estimate", "--points", "2")
    assert rc == rc2 == 0 and a == b
    assert a["outputs"]["profile"]["hbar"] == pytest.approx(0.5 * math.pi)


def test_shipped_schemas_in_sync():
    from importlib import resources

    for name in ("stablemap", "config", "run_report"):
        shipped = json.loads((DOCS / "schemas" / f"{name}.schema.json").read_text())
        packaged = json.loads(resources.files("gromovdisc").joinpath(f"data/{name}.schema.json").read_text())
        assert shipped == packaged
