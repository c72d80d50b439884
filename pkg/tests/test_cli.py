"""CLI: artifacts, manifests, determinism, exit codes, figures."""

import json
import math
from pathlib import Path

import pytest

from shockctrl.cli import parse_and_dispatch


def run(args):
    return parse_and_dispatch(args)


def test_spectrum_command(tmp_path):
    out = tmp_path / "spec.csv"
    rc = run(["spectrum", "--eps", "0.1", "--L", "1", "--K", "8",
              "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 10                       # header + K+1 rows
    man = json.loads((tmp_path / "spec.csv.manifest.json").read_text())
    assert man["command"] == "spectrum"
    assert man["eps"] == 0.1 and man["K"] == 8
    assert man["deterministic"] is True


def test_spectrum_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["spectrum", "--eps", "0.1", "--K", "4", "--out", str(a)])
    run(["spectrum", "--eps", "0.1", "--K", "4", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_synthesize_manifest_tau(tmp_path):
    out = tmp_path / "h.csv"
    T = 10.4
    rc = run(["synthesize", "--eps", "0.1", "--L", "1", "--T", str(T),
              "--u0", "sin", "--K", "6", "--out", str(out)])
    assert rc == 0
    man = json.loads((tmp_path / "h.csv.manifest.json").read_text())
    assert man["tau"] == pytest.approx((T - 4.0 * math.sqrt(3.0)) / 2.0,
                                       rel=1e-12)
    rep = json.loads((tmp_path / "h.report.json").read_text())
    assert "l2_norm" in rep and "moment_residual_max" in rep


def test_lower_bound_command(tmp_path):
    out = tmp_path / "lb.csv"
    rc = run(["lower-bound", "--eps", "0.1", "--T", "2.0", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "eps,T,exponent_rate,prefactor_log,blowup_flag"
    assert rows[1].endswith("true")


def test_limit_command(tmp_path):
    out = tmp_path / "lim.csv"
    rc = run(["limit", "--eps", "0.1", "--T", "2.0", "--u0", "bump",
              "--shape", "inviscid", "--out", str(out)])
    assert rc == 0
    data = json.loads((tmp_path / "lim.limit.json").read_text())
    assert abs(data["dirac_mass"]) < 1e-12


def test_sweep_command_cells_and_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    lo = 0.8 * (4.0 * math.sqrt(2.0) - 2.0)
    rc = run(["sweep", "--eps", "0.2,0.1", "--T", f"{lo}",
              "--K", "4", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "eps,T,measured_cost,bound_rhs,exponent_rate,blowup_flag"
    assert len(rows) == 3
    assert (tmp_path / "sweep.png").exists()      # report path renders figures


def test_biorth_command(tmp_path):
    out = tmp_path / "fam.csv"
    rc = run(["biorth", "--eps", "0.1", "--K", "4", "--T-tilde", "7",
              "--out", str(out), "--figures"])
    assert rc == 0
    assert (tmp_path / "fam_k1.csv").exists()
    assert (tmp_path / "fam_k4.csv").exists()
    resid = json.loads((tmp_path / "fam.residuals.json").read_text())
    assert resid["max_abs"] < 1e-6
    assert (tmp_path / "fam.png").exists()


def test_unknown_command_exits_2(tmp_path):
    assert run(["frobnicate", "--out", str(tmp_path / "x")]) == 2


def test_bad_value_exits_2(tmp_path):
    rc = run(["spectrum", "--eps", "0.1", "--K", "4", "--u0-not-a-flag",
              "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_bad_u0_exits_2(tmp_path):
    rc = run(["synthesize", "--eps", "0.1", "--T", "10.4", "--u0", "wavelet",
              "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_numeric_failure_exit_1(tmp_path):
    # horizon below the two-phase threshold is a numeric-domain failure
    rc = run(["synthesize", "--eps", "0.1", "--T", "2.0", "--u0", "sin",
              "--out", str(tmp_path / "x.csv")])
    assert rc == 1
