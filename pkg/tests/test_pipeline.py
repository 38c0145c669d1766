import math
import os

import numpy as np
import pytest

from burgerscap import parse_config, prove_global
from burgerscap.errors import ConfigurationError, GlobalInconclusive
from burgerscap.fixedpoint import CoordinateChange
from burgerscap.pipeline import (SUMMARY_COLUMNS, emit_certificate, emit_text, format_table,
                                 parse_certificate, read_certificate, report)
from conftest import CONFIGS

ROW3_TEXT = open(os.path.join(CONFIGS, "row3.cfg"), encoding="utf-8").read()


# configuration ---------------------------------------------------------------------

def test_parse_row3():
    cfg = parse_config(ROW3_TEXT)
    assert float(cfg.nu.lo) == 2.0 and float(cfg.nu.hi) >= 2.1
    assert cfg.alpha == 0.5 and cfg.m == 3 and cfg.taylor_order == 6
    assert cfg.step_size == 0.005 and cfg.s == 4
    assert cfg.epsilon >= 0.03
    modes = {k: (float(r.mid()), float(i.mid())) for k, r, i in cfg.forcing}
    assert modes == {2: (0.8, 0.0), 3: (0.0, 1.0)}


def test_decimal_nu_is_enclosed():
    cfg = parse_config("nu = 0.1\nm = 2\n")
    assert float(cfg.nu.lo) <= 0.1 <= float(cfg.nu.hi) and float(cfg.nu.lo) < float(cfg.nu.hi)


def test_aliases_and_defaults():
    cfg = parse_config("nu = 1\nm = 2\na0 = 0.25\neps = 0\nm_tail = 9\ntaylor_order = 4\n"
                       "absorbing_intersect = yes\nf[1] = 0.5\n")
    assert cfg.alpha == 0.25 and cfg.M == 9 and cfg.taylor_order == 4
    assert cfg.absorbing_intersect is True and cfg.max_steps == 5000
    assert [(k, float(i.lo)) for k, _, i in cfg.forcing] == [(1, 0.0)]


@pytest.mark.parametrize("text", [
    "m = 3\n",                        # nu missing
    "nu = 1\nm = 3\nbogus = 1\n",     # unknown key
    "nu = 1\nm = 3\nf[4] = 1, 0\n",   # forcing beyond m
    "nu = 1\nm = 3\nf[0] = 1, 0\n",   # mean forcing
    "nu = 1\nm = 3\ns = 3\n",         # too little decay
    "nu = 1\nm = 3\nh = -0.1\n",
    "nu = 1\nm = 3\nm = x\n",
    "nu = 1\nm = 3\njust text\n",
    "nu = 1 2 3\nm = 3\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


# the proof ---------------------------------------------------------------------------------

def test_row3_verdicts(row3_certificate):
    c = row3_certificate
    assert c.existence and c.local and c.global_
    assert c.l < 0 and c.step_count > 0 and c.t_hat > 0
    assert c.fixed_point is not None


def test_verdicts_are_nested(row3_certificate):
    c = row3_certificate
    assert (not c.global_ or c.local) and (not c.local or c.existence)


def test_fixed_point_enclosure(row3_certificate):
    c = row3_certificate
    fp = c.fixed_point
    x = c.xbar
    fin = fp.finite
    assert np.all(fin.re.lo <= x[0::2]) and np.all(x[0::2] <= fin.re.hi)
    assert np.all(fin.im.lo <= x[1::2]) and np.all(x[1::2] <= fin.im.hi)
    start = c.W_tilde.canonical_finite(CoordinateChange(c.A, c.Ainv))
    assert np.all(fin.to_real().width() <= start.width())


def test_summary_row(row3_certificate):
    row = row3_certificate.summary_row()
    assert len(row) == len(SUMMARY_COLUMNS) == 11
    assert row[-3:] == ["yes", "yes", "yes"]
    assert float(row[1]) == pytest.approx(math.pi)


def test_certificate_round_trip(row3_certificate, tmp_path):
    text = emit_text(row3_certificate)
    back = parse_certificate(text)
    assert emit_text(back) == text
    path = tmp_path / "row3.cert"
    emit_certificate(row3_certificate, str(path))
    assert path.read_text(encoding="utf-8") == text
    again = read_certificate(str(path))
    assert np.array_equal(again.A.lo, row3_certificate.A.lo)
    assert again.W_tilde.radii.tolist() == row3_certificate.W_tilde.radii.tolist()
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".cert-")]


def test_report_table(row3_certificate, tmp_path):
    for name in ("a.cert", "b.cert"):
        emit_certificate(row3_certificate, str(tmp_path / name))
    rows = report([str(tmp_path / "b.cert"), str(tmp_path / "a.cert")])
    assert rows[0] == list(SUMMARY_COLUMNS) and len(rows) == 3
    table = format_table(rows)
    assert table.count("\n") == 2 and "existence" in table


@pytest.mark.slow
def test_deterministic_rerun(row3_config, row3_certificate):
    again = prove_global(row3_config)
    assert emit_text(again, timing=False) == emit_text(row3_certificate, timing=False)


def test_trivial_problem():
    cert = prove_global(parse_config("nu = 1\nm = 2\nalpha = 0\nrefine_steps = 5\n"))
    assert cert.existence and cert.local and cert.global_
    assert np.max(np.abs(cert.xbar)) < 1e-12
    assert cert.l < 0


def test_budget_exhaustion_raises():
    cfg = parse_config(ROW3_TEXT + "max_steps = 1\ntighten_on_failure = false\n")
    with pytest.raises(GlobalInconclusive) as info:
        prove_global(cfg, raise_inconclusive=True)
    cert = info.value.certificate
    assert cert.existence and cert.local and not cert.global_
    assert cert.step_count == 1


def test_budget_exhaustion_reported():
    cfg = parse_config(ROW3_TEXT + "max_steps = 1\ntighten_on_failure = false\n")
    cert = prove_global(cfg)
    assert not cert.global_ and cert.messages
    assert cert.summary_row()[6:8] == ["-", "-"]
