import json
from pathlib import Path

import jsonschema
import pytest

from diffcoh.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, load_schema, main

JOBS = Path(__file__).resolve().parent.parent / "jobs"

SMALL = {
    "complexes": ["circle", "disk-pair"],
    "suites": ["axioms", "group", "pairs"],
    "degrees": [1, 2],
    "samples": 1,
    "seed": 3,
}


def _run(tmp_path, job, *extra, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(job))
    out = tmp_path / (name + ".out")
    code = main(["run", str(path), "--out", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def test_run_and_schema(tmp_path):
    code, text = _run(tmp_path, SMALL)
    assert code == EXIT_OK
    report = json.loads(text)
    schema = load_schema("certificate.schema.json")
    assert report["summary"]["failed"] == 0 and report["summary"]["verified"] == len(report["certificates"])
    for cert in report["certificates"]:
        jsonschema.validate(cert, schema)
        assert cert["timing"] is None
    claims = {c["claim"] for c in report["certificates"]}
    assert "pairs.sub.kernel-in-image" in claims and "axioms.kerI-in-image-a" in claims


def test_deterministic_across_worker_counts(tmp_path):
    _, a = _run(tmp_path, SMALL, name="a.json")
    _, b = _run(tmp_path, SMALL, name="b.json")
    _, c = _run(tmp_path, SMALL, "--jobs", "2", name="c.json")
    assert a == b == c


def test_failed_fixture(tmp_path):
    job = json.loads((JOBS / "fixtures.json").read_text())
    code, text = _run(tmp_path, job)
    assert code == EXIT_FAILED
    bad = [c for c in json.loads(text)["certificates"] if c["status"] == "failed"]
    assert len(bad) == 1
    cert = bad[0]
    assert cert["claim"] == "fixture.bad-structure.valid"
    assert cert["counterexample"]["violation"] == "structure-equation-violated"
    assert cert["counterexample"]["simplex"] == "e"
    jsonschema.validate(cert, load_schema("certificate.schema.json"))


@pytest.mark.parametrize("job", [
    {"complexes": ["nowhere"], "suites": ["axioms"]},
    {"complexes": ["circle"], "suites": ["axioms"], "colour": 1},
    {"complexes": ["circle"], "suites": ["nonsense"]},
    {"complexes": ["circle"], "suites": ["axioms"], "budget": {"cap": 5, "limit": 2}},
    {"complexes": [{"name": "bad", "presentation": {"cells": {"0": ["v"], "1": ["e"]},
                                                    "faces": {"e": ["v", "w"]}}}], "suites": ["axioms"]},
])
def test_usage_errors(tmp_path, job, capsys):
    code, _ = _run(tmp_path, job)
    assert code == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_missing_file_and_bad_args(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_custom_presentation(tmp_path):
    job = {"complexes": [{"name": "tri", "presentation": {
        "cells": {"0": ["a", "b", "c"], "1": ["x", "y", "z"], "2": ["T"]},
        "faces": {"x": ["b", "a"], "y": ["c", "a"], "z": ["c", "b"], "T": ["z", "y", "x"]}},
        "subcomplex": ["a", "b", "c", "x", "y", "z"]}],
        "suites": ["pairs"], "degrees": [1], "samples": 1}
    code, text = _run(tmp_path, job)
    assert code == EXIT_OK
    assert {c["complex"] for c in json.loads(text)["certificates"]} == {"tri"}


def test_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DIFFCOH_CACHE_DIR", str(tmp_path / "cache"))
    _, first = _run(tmp_path, SMALL, name="x.json")
    assert any((tmp_path / "cache").iterdir())
    _, second = _run(tmp_path, SMALL, name="y.json")
    assert first == second


def test_timings(tmp_path):
    _, text = _run(tmp_path, {**SMALL, "complexes": ["circle"]}, "--timings")
    times = [c["timing"] for c in json.loads(text)["certificates"] if not c["claim"].startswith("fixture")]
    assert all(isinstance(t, float) for t in times)


@pytest.mark.parametrize("name, n, expected", [
    ("rp2", 2, "ℤ/2"),
    ("circle", 1, "ℤ"),
    ("point", 0, "ℤ"),
    ("torus", 1, "ℤ^2"),
    ("disk-pair", 1, "0"),
])
def test_compute_cohomology(capsys, name, n, expected):
    assert main(["compute", name, "--n", str(n)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["cohomology"] == expected


def test_compute_invariants(capsys, tmp_path):
    coeff = tmp_path / "coeff.json"
    coeff.write_text(json.dumps({"kind": "laurent", "generator_degree": -2}))
    assert main(["compute", "circle", "--n", "2", "--coeff", str(coeff), "--what", "diffcoh-invariants"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert "E^n" in out
    assert main(["compute", "nowhere", "--n", "1"]) == EXIT_USAGE


def test_circle_axioms_all_verified(tmp_path):
    code, text = _run(tmp_path, {"complexes": ["circle"], "suites": ["axioms"]})
    assert code == EXIT_OK
    assert all(c["status"] == "verified" for c in json.loads(text)["certificates"])


def test_torus_ring_commutativity_carries_witness(tmp_path):
    code, text = _run(tmp_path, {"complexes": ["torus"], "suites": ["ring"], "samples": 2})
    assert code == EXIT_OK
    certs = {c["claim"]: c for c in json.loads(text)["certificates"]}
    wit = certs["ring.graded-commutative"]["witness"]
    assert set(wit) >= {"b", "k", "sign"} and wit["sign"] == -1
