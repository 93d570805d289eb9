"""Canonical report serialization: byte identity, float fidelity."""

import json

import pytest

from brainalign.report import EvalReport, sha256_digest


def _report():
    rep = EvalReport(tool="demo", version="0.1.0")
    rep.add_section("scores", {"f1": 1 / 3, "precision": 1.0, "n": 7})
    rep.add_section("curve", [0.1, 0.2])
    return rep


def test_json_is_byte_stable_and_sorted():
    a = _report().to_json()
    b = _report().to_json()
    assert a == b
    assert a.endswith("\n")
    data = json.loads(a)
    assert list(data) == sorted(data)
    assert data["runtime_seconds"] is None


def test_runtime_excluded_unless_requested():
    rep = _report()
    assert json.loads(rep.to_json())["runtime_seconds"] is None
    rep.runtime_seconds = 1.25
    assert json.loads(rep.to_json())["runtime_seconds"] == 1.25


def test_csv_floats_match_json_text():
    rep = _report()
    js = rep.to_json()
    csv = rep.to_csv()
    float_text = json.dumps(1 / 3)
    assert float_text in js
    assert f"scores,f1,{float_text}" in csv


def test_csv_layout_and_quoting():
    rep = EvalReport(tool="demo", version="0")
    rep.add_section("notes", {"msg": 'has,comma "and" quotes'})
    csv = rep.to_csv()
    lines = csv.splitlines()
    assert lines[0] == "section,key,value"
    quoted = [l for l in lines if l.startswith("notes,msg,")]
    assert quoted == ['notes,msg,"""has,comma \\""and\\"" quotes"""']
    # cell must parse back to the original string through the two layers
    cell = quoted[0].split(",", 2)[2]
    unquoted = cell[1:-1].replace('""', '"')
    assert json.loads(unquoted) == 'has,comma "and" quotes'


def test_csv_lists_are_indexed():
    csv = _report().to_csv()
    assert "curve,[0],0.1" in csv
    assert "curve,[1],0.2" in csv


def test_sections_reject_non_finite_and_bad_keys():
    rep = EvalReport(tool="demo", version="0")
    with pytest.raises(ValueError):
        rep.add_section("bad", {"x": float("nan")})
    with pytest.raises(ValueError):
        rep.add_section("bad", [float("inf")])
    with pytest.raises(TypeError):
        rep.add_section("bad", {3: "x"})
    with pytest.raises(TypeError):
        rep.add_section("bad", {"x": object()})


def test_add_input_hashes_file(tmp_path):
    path = tmp_path / "input.txt"
    path.write_bytes(b"hello")
    rep = EvalReport(tool="demo", version="0")
    rep.add_input("captions", path)
    assert rep.inputs["captions"] == sha256_digest(path)
    assert len(rep.inputs["captions"]) == 64


def test_render_dispatch():
    rep = _report()
    assert rep.render("json") == rep.to_json()
    assert rep.render("csv") == rep.to_csv()
    with pytest.raises(ValueError):
        rep.render("yaml")
