import os
import subprocess
import sys

import pytest

from burgerscap.cli import main
from conftest import CONFIGS

ROW3 = os.path.join(CONFIGS, "row3.cfg")


def test_fixed_point_command(tmp_path, capsys):
    assert main(["fixed-point", "--config", ROW3]) == 0
    out = capsys.readouterr().out
    assert "attracting = true" in out and out.startswith("xbar = ")


def test_absorbing_command(tmp_path):
    out = tmp_path / "abs.txt"
    assert main(["absorbing-set", "--config", ROW3, "--out", str(out)]) == 0
    text = out.read_text()
    assert "k | re_lo re_hi | im_lo im_hi" in text and "/ k^4.0" in text


def test_integrate_command(capsys):
    assert main(["integrate", "--config", ROW3, "--steps", "2"]) == 0
    assert capsys.readouterr().out.startswith("t = 0.01")


def test_prove_and_report(tmp_path, capsys):
    cert = tmp_path / "row3.cert"
    assert main(["prove", "--config", ROW3, "--out", str(cert)]) == 0
    assert cert.exists()
    capsys.readouterr()
    assert main(["report", "--certs", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("nu") and "yes" in out


def test_report_without_certificates(tmp_path):
    assert main(["report", "--certs", str(tmp_path)]) == 1


def test_bad_config_exits_with_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nu = 1\nm = 2\nwhat = 3\n")
    assert main(["fixed-point", "--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["fixed-point", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_prove_budget_failure_exit_code(tmp_path):
    cfg = tmp_path / "short.cfg"
    cfg.write_text(open(ROW3).read() + "tighten_on_failure = false\n")
    assert main(["prove", "--config", str(cfg), "--max-steps", "1",
                 "--out", str(tmp_path / "short.cert")]) == 1


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "burgerscap.cli", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for cmd in ("prove", "absorbing-set", "fixed-point", "integrate", "report"):
        assert cmd in out


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
