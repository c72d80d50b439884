"""Band-limited multiplier: normalization, bounds, branch consistency."""

import math

import mpmath as mp
import numpy as np
import pytest

import shockctrl as sc
from shockctrl.errors import MultiplierEvalOverflow
from shockctrl.multiplier import choose_multiplier


@pytest.fixture(scope="module")
def mult():
    # acceptance-point geometry: S for (eps=0.1, T~=7), default margin
    S = math.pi ** 2 * 0.1 * 7.0 / 4.0
    return choose_multiplier(S, 6.0, eta_max=45.2)


def _h_reference(m, y, dps=60):
    mp.mp.dps = dps
    nu, beta = mp.mpf(m.nu), mp.mpf(m.beta)
    f = lambda t: mp.e ** (-nu / (1 - t * t)) * mp.cos(beta * t * y)
    val = mp.quad(f, [-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1],
                  maxdegree=14)
    return float(val) * m.c_nu


def test_normalization(mult):
    lg, sg = mult.log_abs_real(0.0)
    assert sg[0] == 1.0
    assert math.exp(lg[0]) == pytest.approx(1.0, rel=1e-12)


def test_selection_constraints(mult):
    S, kappa = mult.S, mult.kappa
    assert S / kappa < mult.beta < S
    assert mult.nu == pytest.approx((math.pi + mult.delta) ** 2 / mult.beta)
    assert mult.nu < (4.0 - mult.delta) * math.pi ** 2 * kappa / (4.0 * S) * (1 + 1e-12)


@pytest.mark.parametrize("y", [3.0, 10.0, 24.0, 26.0, 40.0, 90.0, 400.0])
def test_real_axis_against_mpmath(mult, y):
    ref = _h_reference(mult, y)
    lg, sg = mult.log_abs_real(y)
    got = sg[0] * math.exp(lg[0])
    assert got == pytest.approx(ref, rel=5e-10)


def test_branch_consistency_at_switch(mult):
    # quadrature and descent-contour branches agree across the switch point
    ys = np.linspace(20.0, 30.0, 11)
    gl = mult._real_gl(ys)
    lg, sg = mult._real_nsd(ys)
    nsd = sg * np.exp(lg)
    assert np.allclose(gl, nsd, rtol=1e-9)


def test_real_axis_decay_bound(mult):
    # |H(x)| <= c sqrt(nu+1) exp(3 nu/4 - (pi + delta/2) sqrt|x|)
    ys = np.linspace(5.0, 2000.0, 80)
    lg, _ = mult.log_abs_real(ys)
    envelope = 0.75 * mult.nu - (math.pi + mult.delta / 2.0) * np.sqrt(ys)
    c = np.exp(lg - envelope) / math.sqrt(mult.nu + 1.0)
    assert np.all(np.isfinite(c))
    assert np.max(c) < 1e3


def test_imag_axis_growth_bound(mult):
    # |H(iy)| >= exp(beta |y|/(2 sqrt(nu+1)))/(11 sqrt(nu+1))
    for y in (5.0, 20.0, 60.0):
        lg = mult.log_imag_axis(y)
        lower = -math.log(11.0 * math.sqrt(mult.nu + 1.0)) \
            + mult.beta * y / (2.0 * math.sqrt(mult.nu + 1.0))
        assert lg >= lower


def test_general_complex_argument(mult):
    z = 4.0 + 2.0j
    lg = mult.eval_log(z)
    mp.mp.dps = 40
    f = lambda t: mp.e ** (-mp.mpf(mult.nu) / (1 - t * t)
                           - 1j * mp.mpf(mult.beta) * t * (4 + 2j))
    ref = complex(mp.quad(f, [-1, -0.5, 0, 0.5, 1], maxdegree=12)) * mult.c_nu
    got = np.exp(complex(lg))
    assert got == pytest.approx(ref, rel=1e-9)


def test_real_axis_fallback_in_general_evaluator(mult):
    # deep real-axis arguments fall back to the descent evaluator
    lg = mult.eval_log(3000.0 + 0.0j)
    ref, _ = mult.log_abs_real(3000.0)
    assert np.real(lg) == pytest.approx(ref[0], rel=1e-10)


def test_overflow_error_on_hopeless_argument(mult):
    # off-axis arguments with cancellation below the double floor are refused
    with pytest.raises(MultiplierEvalOverflow):
        mult.eval_log(2500.0 + 0.3j)


def test_infeasible_margin_rejected():
    with pytest.raises(ValueError):
        choose_multiplier(1.7, 0.9)
