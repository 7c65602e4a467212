"""Config validation, report serialization, CLI surface, determinism."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pchgrav import cli
from pchgrav.config import ConfigError, load_config, validate_config
from pchgrav.report import load_report, write_report
from pchgrav.suites import run_suites


def write_cfg(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_minimal_config_valid(tmp_path):
    path = write_cfg(tmp_path, {"signature": "lorentzian", "gamma": 1, "Lambda": 0,
                                "grid_n": [8], "seed": 1, "suites": ["algebra"]})
    cfg = load_config(path)
    assert cfg.signature == "lorentzian" and cfg.gamma == 1.0 and cfg.suites == ["algebra"]


def test_gamma_zero_rejected(tmp_path):
    with pytest.raises(ConfigError, match="gamma"):
        load_config(write_cfg(tmp_path, {"gamma": 0}))


def test_gamma_infinity_accepted():
    cfg = validate_config({"gamma": "infinity"})
    assert math.isinf(cfg.gamma)
    assert cfg.as_dict()["gamma"] == "infinity"


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match=r"\$\.frobnicate"):
        validate_config({"frobnicate": 1})


def test_grid_validation():
    with pytest.raises(ConfigError, match=r"\$\.grid_n\[0\]"):
        validate_config({"grid_n": [7]})
    with pytest.raises(ConfigError, match="halfshell"):
        validate_config({"grid_n": [2], "suites": ["algebra"]})
    validate_config({"grid_n": [2], "suites": ["halfshell"]})


def test_unknown_suite_rejected():
    with pytest.raises(ConfigError, match="unknown suite"):
        validate_config({"suites": ["bogus"]})


def test_empty_suites_empty_report():
    cfg = validate_config({"suites": []})
    rep = run_suites(cfg)
    assert rep.rows == [] and rep.all_passed


def test_report_roundtrip_and_csv(tmp_path):
    cfg = validate_config({"suites": ["algebra"], "seed": 3})
    rep = run_suites(cfg)
    jpath = tmp_path / "report with spaces.json"
    write_report(rep, jpath, "json")
    assert load_report(jpath) == rep.as_dict()
    cpath = tmp_path / "report.csv"
    write_report(rep, cpath, "csv")
    lines = cpath.read_text().splitlines()
    assert len(lines) == len(rep.rows) + 1
    assert lines[0].startswith("id,anchor,")


def test_anchor_field_always_present():
    cfg = validate_config({"suites": ["algebra", "kernels"], "seed": 3})
    rep = run_suites(cfg)
    assert all(r.anchor for r in rep.rows)


def test_determinism_contract():
    cfg = validate_config({"suites": ["algebra", "kernels"], "seed": 42})
    v1 = [r.values for r in run_suites(cfg).rows]
    v2 = [r.values for r in run_suites(cfg, threads=2).rows]
    assert json.dumps(v1, sort_keys=True, default=str) == json.dumps(v2, sort_keys=True, default=str)


def test_cli_verify_exit_codes(tmp_path, capsys):
    cfgp = write_cfg(tmp_path, {"suites": ["algebra"], "seed": 1})
    out = tmp_path / "rep.json"
    code = cli.main(["verify", "--config", str(cfgp), "--out", str(out)])
    assert code == 0
    assert load_report(out)["all_passed"]
    captured = capsys.readouterr()
    assert "[PASS] algebra/twist-determinants" in captured.out

    bad = write_cfg(tmp_path, {"gamma": 0}, "bad.json")
    assert cli.main(["verify", "--config", str(bad)]) == 2

    # deliberately unreachable tolerance forces a check failure -> exit 1
    strict = write_cfg(tmp_path, {"suites": ["algebra"], "seed": 1,
                                  "tolerances": {"star_cyclic": 1e-30}}, "strict.json")
    assert cli.main(["verify", "--config", str(strict)]) == 1


def test_cli_field_pipeline(tmp_path):
    from pchgrav.fiber import LORENTZIAN
    from pchgrav.grid import load_field, save_field
    from pchgrav.suites import random_offshell_state

    rng = np.random.Generator(np.random.Philox(key=12))
    st = random_offshell_state(rng, __import__("pchgrav").grid.Grid3(4), LORENTZIAN, 1.0, 0.0)
    epath = tmp_path / "e.pchf"
    opath = tmp_path / "om.pchf"
    save_field(st.e.field, epath, sig=LORENTZIAN)
    save_field(st.omega, opath, sig=LORENTZIAN)

    wout = tmp_path / "omega_tilde.pchf"
    assert cli.main(["omega-tilde", "--coframe", str(epath), "--connection", str(opath),
                     "--out", str(wout)]) == 0
    back, header = load_field(wout)
    assert header["meta"]["structural_residual"] <= 1e-9

    rout = tmp_path / "eh.json"
    assert cli.main(["reduce", "--coframe", str(epath), "--connection", str(opath),
                     "--out", str(rout)]) == 0
    data = json.loads(rout.read_text())
    assert data["n"] == 4 and "H_density" in data["tables"]

    rcsv = tmp_path / "eh.csv"
    assert cli.main(["reduce", "--coframe", str(epath), "--connection", str(opath),
                     "--out", str(rcsv), "--format", "csv"]) == 0
    assert len(rcsv.read_text().splitlines()) == 4**3 + 1


def test_cli_entrypoint_subprocess():
    proc = subprocess.run([sys.executable, "-m", "pchgrav.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "verify" in proc.stdout and "omega-tilde" in proc.stdout
