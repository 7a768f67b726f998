import json
import os
import subprocess
import sys

import pytest

from fracfde import cli
from fracfde.errors import OutOfRange, ParseError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_empty_config_defaults(tmp_path):
    cfg = cli.parse_config(write(tmp_path, "c.json", ""))
    assert cfg.params == {"m": 0.5, "sigma": 0.25, "dim": 1}
    assert cfg.grid == {"L": 1.0, "N": 256}


def test_invalid_m_propagates(tmp_path):
    path = write(tmp_path, "c.json", '{"params": {"m": 0.3, "sigma": 0.25, "dim": 1}}')
    with pytest.raises(OutOfRange):
        cli.parse_config(path)


def test_flag_overrides_file(tmp_path):
    path = write(tmp_path, "c.json", '{"params": {"sigma": 0.25}}')
    cfg = cli.parse_config(path, {"sigma": 0.3})
    assert cfg.params["sigma"] == 0.3


@pytest.mark.parametrize("text", ['{"foo": 1}', '{"grid": {"M": 3}}', '{"params": 3}', "{bad json",
                                  '{"checks": ["nope"]}'])
def test_parse_errors(tmp_path, text):
    with pytest.raises(ParseError):
        cli.parse_config(write(tmp_path, "c.json", text))


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACFDE_OUT", str(tmp_path / "env"))
    cfg = cli.parse_config(None, {"out": str(tmp_path / "flag")})
    assert cfg.out == str(tmp_path / "env")


def test_simulate_outputs(tmp_path):
    out = tmp_path / "sim"
    code = cli.main(["simulate", "--grid-n", "64", "--t-end", "0.3", "--dt0", "0.01", "--out", str(out)])
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,mass,energy,seminorm,sup_v,dt"
    t = [float(r.split(",")[0]) for r in lines[1:]]
    assert all(b > a for a, b in zip(t, t[1:]))
    states = sorted(p.name for p in out.glob("state_*.csv"))
    assert states and (out / states[0]).read_text().startswith("x,u,v\n")
    doc = json.loads((out / "report.json").read_text())
    assert doc["schema"] == 1 and doc["checks"] == []
    assert not [p for p in out.iterdir() if p.name.startswith(".tmp-")]


def test_exit_code_counts_failures(tmp_path, monkeypatch):
    from fracfde import harness
    from fracfde.report import PropertyReport

    monkeypatch.setitem(harness.CHECKS, "operator", lambda ctx: PropertyReport("operator", False))
    code = cli.main(["properties", "--grid-n", "32", "--checks", "operator,barrier", "--out", str(tmp_path)])
    assert code == 1
    doc = json.loads((tmp_path / "report.json").read_text())
    assert [c["pass"] for c in doc["checks"]] == [False, True]
    assert doc["failed"] == 1


def test_report_byte_identical(tmp_path):
    args = ["properties", "--grid-n", "64", "--checks", "operator,l1_contraction,sobolev", "--seed", "7"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_profile_and_holder_outputs(tmp_path):
    cli.main(["profile", "--grid-n", "64", "--checks", "asymptotics", "--out", str(tmp_path)])
    assert (tmp_path / "profile.csv").read_text().startswith("x,phi,f\n")
    cli.main(["holder", "--grid-n", "64", "--out", str(tmp_path)])
    rows = (tmp_path / "holder.csv").read_text().splitlines()
    assert rows[0] == "k,r,omega" and len(rows) == 4


def test_unknown_subcommand_usage():
    proc = subprocess.run([sys.executable, "-m", "fracfde.cli", "frobnicate"], capture_output=True, text=True,
                          env={**os.environ, "FRACFDE_OUT": ""})
    assert proc.returncode != 0
    assert "usage" in proc.stderr
