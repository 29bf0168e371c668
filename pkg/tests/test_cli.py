import json

import pytest
from click.testing import CliRunner

from klab.cli import main


@pytest.fixture
def run():
    runner = CliRunner()
    return lambda *args: runner.invoke(main, [str(a) for a in args])


def test_apply_exact(run):
    res = run("apply", "--n", 4, "--fn", "e2", "--x", "1/1")
    assert res.exit_code == 0
    assert res.output.startswith("61/75")


def test_apply_float(run):
    res = run("apply", "--n", 7, "--fn", "exp", "--x", "0.3")
    assert res.exit_code == 0 and float(res.output) > 1


def test_moments(run):
    res = run("moments", "--n", 5, "--order", 2, "--x", "1/4", "--exact")
    assert "13/432" in res.output and "agree:  True" in res.output


def test_modulus(run):
    res = run("modulus", "--fn", "e2", "--k", 2, "--t", 0.3, "--grid-only")
    assert res.exit_code == 0 and float(res.output.split()[0]) == pytest.approx(0.18)


def test_majorant(run):
    assert float(run("majorant", "--fn", "abs_half", "--t", 0.7).output) == pytest.approx(0.5)


def test_check_writes_csv(run, tmp_path):
    out = tmp_path / "t24.csv"
    res = run("check", "--theorem", "UNIFORM_T24", "--fn", "e2", "--n-list", "4,8", "--csv", out)
    assert res.exit_code == 0
    assert len(out.read_text().splitlines()) == 3


def test_check_simultaneous_order(run):
    res = run("check", "--theorem", "SIMULTANEOUS_T25", "--fn", "e2", "--n-list", "16", "--r", 1)
    assert res.exit_code == 0 and "rhs=0.25" in res.output


def test_check_skip_is_not_failure(run):
    res = run("check", "--theorem", "VORONOVSKAYA_T31", "--fn", "abs_half", "--n-list", "8")
    assert res.exit_code == 0 and "SKIPPED" in res.output


def test_rates(run):
    res = run("rates", "--pair", "e2,exp")
    assert res.exit_code == 0 and "GV_RATE_T52: class O(1/n) PASSED" in res.output


def test_unknown_function(run):
    res = run("apply", "--n", 3, "--fn", "nope", "--x", "0.5")
    assert res.exit_code != 0 and "unknown corpus function" in res.output


def test_suite_with_config_and_override(run, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_values": [4, 8], "functions": ["e1", "exp"],
                               "theorems": ["UNIFORM_T24"], "identity_n_max": 3}))
    out = tmp_path / "r.csv"
    res = run("suite", "--config", cfg, "--format", "csv", "--output", out, "--n-list", "4")
    assert res.exit_code == 0, res.output
    assert len(out.read_text().splitlines()) == 3


def test_suite_bad_config(run, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "rational", "n_values": [100]}))
    res = run("suite", "--config", cfg, "--output", tmp_path / "r.json")
    assert res.exit_code != 0 and "rational mode" in res.output
