import json
import subprocess
import sys

import pytest

from fockforge import cli, harness
from fockforge.harness import ConfigError, parse_config


def _cfg(**over):
    base = {"grid": {"n_max": 1, "boundary_mode": "wrap"}, "checks": [{"name": "car_suite"}]}
    base.update(over)
    return base


def test_car_only_config_passes():
    out = harness.run(parse_config(_cfg()), workers=1)
    assert out.exit_code == 0 and out.report["summary"]["passed"]


@pytest.mark.parametrize(
    "data,key",
    [
        ({"grid": {"n_max": 1}, "checks": [{"name": "nope"}]}, "checks[0].name"),
        ({"checks": [{"name": "lemma", "order_list": [2, 1]}]}, "checks[0].order_list"),
        ({"checks": [{"name": "lemma", "order_list": []}]}, "checks[0].order_list"),
        ({"checks": [{"name": "lemma"}], "bogus": 1}, "bogus"),
        ({"checks": [{"name": "lemma"}], "grid": {"nmax": 1}}, "grid"),
        ({"checks": [{"name": "lemma"}], "statistics": "anyon"}, "statistics"),
        ({"checks": [{"name": "lemma"}], "particle_numbers": [1]}, "particle_numbers"),
        ({"checks": [{"name": "lemma", "tolerance": -1}]}, "checks[0].tolerance"),
        ({"checks": [{"name": "lemma"}], "phase": {"kind": "weird"}}, "phase.kind"),
        ({"checks": []}, "checks"),
    ],
)
def test_config_errors_name_the_key(data, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert key in str(exc.value)


def test_malformed_json():
    with pytest.raises(ConfigError, match="malformed JSON"):
        parse_config('{"checks": [')


def test_worker_env_override(monkeypatch):
    monkeypatch.setenv("FOCKFORGE_WORKERS", "3")
    assert harness.worker_count(parse_config(_cfg(workers=1))) == 3
    monkeypatch.setenv("FOCKFORGE_WORKERS", "x")
    with pytest.raises(ConfigError, match="FOCKFORGE_WORKERS"):
        harness.worker_count()


def test_conjecture_suite_warns_but_exits_zero():
    cfg = parse_config(
        _cfg(
            checks=[
                {
                    "name": "verify_conjecture",
                    "order_list": [1, 2, 3],
                    "tolerance": 1e-12,
                    "params": {"cases": [{"n_max": 1, "particle_numbers": [2, 0]}]},
                }
            ]
        )
    )
    out = harness.run(cfg, workers=2)
    assert out.exit_code == 0
    assert out.warnings


def test_csv_columns():
    out = harness.run(parse_config(_cfg()), workers=1)
    text = harness.report_csv(out.report)
    assert text.splitlines()[0] == "check,q_or_k,order,residual,flag"


def test_parallel_and_serial_reports_agree():
    cfg = parse_config(
        _cfg(checks=[{"name": "lemma", "params": {"instances": 20}}, {"name": "canonical_commutator", "order_list": [1, 2]}])
    )
    a = harness.report_json(harness.run(cfg, workers=1).report, include_timing=False)
    b = harness.report_json(harness.run(cfg, workers=4).report, include_timing=False)
    assert a == b


def test_cli_basis(capsys):
    assert cli.main(["basis", "--nmax", "1", "--nup", "2"]) == 0
    out = capsys.readouterr().out
    assert "dimension 3" in out
    assert "modes: 0:(-1↑) 1:(0↑) 2:(1↑) 3:(-1↓)" in out


def test_cli_phase_hd_marks_undefined(capsys):
    assert cli.main(["phase-hd", "--kf", "1.0", "--nmax", "8", "--dim", "1"]) == 0
    out = capsys.readouterr().out
    assert "negative_radicand" in out and "undefined" in out


def test_cli_verify_lemma(capsys):
    assert cli.main(["verify-lemma", "--seed", "7", "--instances", "20"]) == 0
    assert "max_error=" in capsys.readouterr().out


def test_cli_unknown_subcommand():
    proc = subprocess.run([sys.executable, "-m", "fockforge", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode != 0
    assert "usage" in proc.stderr


def test_cli_run_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {"n_max": 1}, "checks": [{"name": "car_suite", "order_lst": [1]}]}')
    assert cli.main(["run", str(bad), "--out", str(tmp_path)]) == harness.EXIT_CONFIG
    assert "order_lst" in capsys.readouterr().err


def test_cli_run_bundled_car(tmp_path):
    assert cli.main(["run", "car", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "car_report.json").read_text())
    assert report["schema_version"] == harness.SCHEMA_VERSION
    assert report["checks"][0]["passed"]


def test_cli_verify_canonical_and_conjecture(capsys):
    assert cli.main(["verify-canonical", "--nmax", "1", "--orders", "1,2"]) == 0
    assert cli.main(["verify-conjecture", "--nmax", "0", "--nup", "1", "--orders", "1,2", "--tol", "1e-10"]) == 0
    out = capsys.readouterr().out
    assert "canonical_commutator" in out and "verify_conjecture" in out
