import json
import math
import os

import pytest

from mcf.cli import _parse_decimal_up, _parse_seed, _parse_steps, run


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_flag_parsers():
    assert _parse_steps("1e8") == 10**8
    assert _parse_steps("123") == 123
    with pytest.raises(ValueError):
        _parse_steps("1.5e0")
    assert _parse_seed("18446744073709551615") == 2**64 - 1
    with pytest.raises(ValueError):
        _parse_seed("-1")
    v = _parse_decimal_up("0.004776713")
    from fractions import Fraction

    assert Fraction(v) >= Fraction("0.004776713")
    assert Fraction(math.nextafter(v, -math.inf)) < Fraction("0.004776713")


def test_estimate_json(capsys):
    code, out, _ = _run(capsys, "estimate", "--alg", "brun", "--dim", "2",
                        "--steps", "1e4", "--orbits", "2", "--seed", "7",
                        "--renorm", "256")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1 and data["kind"] == "estimate"
    assert data["lambda1"] > data["lambda2"]
    assert len(data["per_orbit"]) == 2


def test_estimate_csv(capsys):
    code, out, _ = _run(capsys, "estimate", "--alg", "selmer", "--dim", "2",
                        "--steps", "1e4", "--orbits", "2", "--renorm", "256",
                        "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("record,orbit,attempt,lambda1")
    assert len(lines) == 4  # header + 2 orbits + pooled


def test_unknown_flag_exits_one(capsys):
    code, _, err = _run(capsys, "estimate", "--alg", "selmer", "--dim", "2",
                        "--bogus")
    assert code == 1
    assert "error" in err


def test_bad_config_exits_one(capsys):
    code, _, err = _run(capsys, "estimate", "--alg", "selmer", "--dim", "1")
    assert code == 1


def test_certify_file_output_and_determinism(tmp_path, capsys):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    env = dict(os.environ)
    assert os.environ.get("MCF_NO_TIMING") == "1"
    for out in (out1, out2):
        code, _, _ = _run(capsys, "certify", "--dim", "2", "--depth", "10",
                          "--refine", "1", "--out", str(out))
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = json.loads(out1.read_text())
    assert data["bound"] < 0
    assert data["checksum_num"] == 1 and data["checksum_den"] == 4

    out3 = tmp_path / "c.json"
    code, _, _ = _run(capsys, "certify", "--dim", "2", "--depth", "10",
                      "--refine", "1", "--tasks", "2", "--out", str(out3))
    assert code == 0
    a = json.loads(out1.read_text())
    b = json.loads(out3.read_text())
    a.pop("tasks"), b.pop("tasks")
    assert a == b


def test_certify_singular_requires_provenance(capsys):
    code, _, err = _run(capsys, "certify", "--dim", "3", "--depth", "8",
                        "--singular-measure", "1.0")
    assert code == 1


def test_certify_external_singular(tmp_path, capsys):
    out = tmp_path / "cert.json"
    code, _, _ = _run(capsys, "certify", "--dim", "3", "--depth", "8",
                      "--singular-measure", "1.0", "--provenance", "trivial",
                      "--out", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    assert data["singular_policy"] == "external"
    assert data["provenance"] == "trivial"


def test_oracle_cli(capsys):
    code, out, _ = _run(capsys, "oracle", "--dim", "2", "--depth", "6")
    assert code == 0
    data = json.loads(out)
    assert data["lo"] <= data["hi"]


def test_pisot_csv(capsys):
    code, out, _ = _run(capsys, "pisot", "--max-len", "6", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1 + (2**7 - 2)
    assert lines[0] == "word,primitive,pisot,condition3,c0,c1,c2,c3"


def test_pisot_json_counts(capsys):
    code, out, _ = _run(capsys, "pisot", "--max-len", "10")
    assert code == 0
    data = json.loads(out)
    assert data["words"] == 2046
    assert data["mismatches"] == []


def test_cylinders_csv(capsys):
    code, out, _ = _run(capsys, "cylinders", "--dim", "2", "--depth", "1",
                        "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "a"


def test_wedge_cli(capsys):
    code, out, _ = _run(capsys, "wedge", "--alg", "selmer", "--dim", "2",
                        "--steps", "1e3", "--renorm", "256")
    assert code == 0
    data = json.loads(out)
    assert data["kind"] == "wedge"
    assert data["balancedness_min"] > 0


def test_conjugacy_cli(capsys):
    code, out, _ = _run(capsys, "conjugacy", "--steps", "1e4", "--orbits", "2")
    assert code == 0
    data = json.loads(out)
    assert data["delta_lambda2"] < 0.5


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "defaults.cfg"
    cfg.write_text("steps=20000\nrenorm=256\norbits=2\nseed=9\n")
    code, out1, _ = _run(capsys, "--config", str(cfg), "estimate",
                         "--alg", "selmer", "--dim", "2")
    assert code == 0
    data1 = json.loads(out1)
    assert data1["config"]["steps"] == 20000
    assert data1["config"]["seed"] == 9
    # flags override the file
    code, out2, _ = _run(capsys, "--config", str(cfg), "estimate",
                         "--alg", "selmer", "--dim", "2", "--seed", "4")
    data2 = json.loads(out2)
    assert data2["config"]["seed"] == 4
