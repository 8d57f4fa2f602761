import csv
import json
from pathlib import Path

import pytest

from mgflow.cli import main
from mgflow.config import parse_config, set_pointer, validate_config
from mgflow.errors import ConfigError

SMALL = {
    "name": "small",
    "surface": {"kind": "FlatTorus"},
    "field": {"kind": "ConstantStrength", "B0": 0.5},
    "initial": {"kind": "FourierMode", "k": 1, "a": 1.0, "b": 1.0},
    "discretization": {"n": 32},
    "run": {"t_max": 0.5, "record_stride": 20},
    "output": {"stride": 2},
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def with_(data, **blocks):
    out = json.loads(json.dumps(data))
    for k, v in blocks.items():
        out.setdefault(k, {}).update(v)
    return out


def violations(data):
    with pytest.raises(ConfigError) as info:
        validate_config(data)
    return info.value.violations


def test_valid_config_and_roundtrip(tmp_path):
    cfg = parse_config(write(tmp_path, SMALL))
    assert cfg.discretization.n == 32 and cfg.magnetic_field().B0 == 0.5
    again = validate_config(json.loads(cfg.to_json()))
    assert again == cfg and again.hash() == cfg.hash()


def test_bound_violation_message():
    v = violations(with_(SMALL, discretization={"n": 4}))
    assert ("/discretization/n", "discretization.n ≥ 8") in v


def test_exact_potential_rejected_off_torus():
    data = with_(SMALL, surface={"kind": "Sphere"}, field={"kind": "ExactPotential", "epsilon": 0.2})
    data["initial"] = {"kind": "SphereLatitude", "theta0": 1.0}
    assert ("/field/kind", "exact potential only on FlatTorus") in violations(data)


def test_all_violations_listed():
    data = with_(SMALL, discretization={"n": 4}, run={"t_max": -1.0})
    ptrs = {p for p, _ in violations(data)}
    assert {"/discretization/n", "/run/t_max"} <= ptrs


def test_missing_generator_parameter():
    data = json.loads(json.dumps(SMALL))
    del data["initial"]["a"]
    assert any(p == "/initial/a" for p, _ in violations(data))


def test_unknown_key_rejected():
    assert violations(with_(SMALL, run={"bogus": 1}))


def test_missing_and_malformed_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "none.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ConfigError, match="malformed"):
        parse_config(bad)


def test_set_pointer():
    assert set_pointer(SMALL, "/field/B0", 2.0)["field"]["B0"] == 2.0
    assert set_pointer(SMALL, "field.B0", 3.0)["field"]["B0"] == 3.0
    assert SMALL["field"]["B0"] == 0.5
    with pytest.raises(ConfigError):
        set_pointer(SMALL, "/field/kind", 1.0)


def test_cli_run_writes_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write(tmp_path, SMALL)), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["classification"] in ("ConvergedPoint", "Timeout")
    for rel in man["artifacts"]:
        assert (out / rel).exists()
    assert (out / "snapshots" / "loop_000000.csv").exists()


def test_cli_run_is_byte_identical(tmp_path):
    cfg = str(write(tmp_path, SMALL))
    main(["run", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    assert a == (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_cli_expect_and_usage_errors(tmp_path):
    cfg = str(write(tmp_path, SMALL))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--expect", "Diverged"]) == 3
    assert main(["run", "--config", cfg, "--out", ""]) == 1
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--expect", "Nope"]) == 1
    bad = str(write(tmp_path, with_(SMALL, discretization={"n": 4}), "bad.json"))
    assert main(["run", "--config", bad, "--out", str(tmp_path / "o2")]) == 1
    assert main(["frobnicate"]) == 1


def test_cli_checkpoint_resume(tmp_path):
    data = with_(SMALL, field={"B0": 1.0}, initial={"a": 2.0}, run={"t_max": 1.0})
    cfg = str(write(tmp_path, data))
    full = tmp_path / "full"
    assert main(["run", "--config", cfg, "--out", str(full), "--checkpoint-every", "3"]) == 0
    ck = full / "checkpoint.json"
    assert ck.exists()
    res = tmp_path / "res"
    assert main(["run", "--config", cfg, "--out", str(res), "--resume", str(ck)]) == 0
    assert (res / "diagnostics.csv").read_bytes() == (full / "diagnostics.csv").read_bytes()
    assert (res / "final_loop.csv").read_bytes() == (full / "final_loop.csv").read_bytes()


def test_cli_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("MGFLOW_THREADS", "1")
    cfg = str(write(tmp_path, SMALL))
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--param", "/field/B0", "--values", "0.7,0.1,0.4", "--out", str(out)]) == 0
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["value"]) for r in rows] == [0.1, 0.4, 0.7]
    assert all((out / r["directory"] / "manifest.json").exists() for r in rows)
    assert main(["sweep", "--config", cfg, "--param", "/field/B0", "--values", "", "--out", str(out)]) == 1
    assert main(["sweep", "--config", cfg, "--param", "/field/kind", "--values", "1", "--out", str(out)]) == 1
    assert main(["sweep", "--config", cfg, "--param", "/field/B0", "--values", "x", "--out", str(out)]) == 1


@pytest.mark.parametrize(
    "case, extra, header",
    [
        ("torus-mode", ["--t", "0.5"], "s,phi,z"),
        ("torus-drift", ["--mu", "0.2"], "s,phi,z"),
        ("sphere-theta", ["--theta0", "1.2", "--B0", "0.5", "--t-end", "1"], "t,theta"),
        ("hyperbolic-theta", ["--t-end", "1"], "t,theta"),
        ("latitude-geodesic", ["--B0", "0.5"], "s,x1,x2,x3"),
        ("plane-circle", ["--n", "16"], "s,x1,x2"),
    ],
)
def test_cli_oracle(tmp_path, case, extra, header):
    out = tmp_path / "o.csv"
    assert main(["oracle", "--case", case, "--out", str(out)] + extra) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == header and len(lines) > 1


def test_cli_oracle_errors(tmp_path):
    assert main(["oracle", "--case", "nope"]) == 1
    assert main(["oracle", "--case", "plane-circle", "--B0", "0", "--out", str(tmp_path / "x")]) == 1
    assert main(["oracle", "--case", "latitude-geodesic", "--theta0", "1.5707963267948966"]) == 1


def test_shipped_scenarios_validate():
    root = Path(__file__).resolve().parents[1] / "scenarios"
    files = sorted(root.glob("*.json"))
    assert files
    for f in files:
        parse_config(f)
