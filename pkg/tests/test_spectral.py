"""Eigenvalue and eigenfunction checks against frozen high-precision oracles."""

import math

import numpy as np
import pytest

import shockctrl as sc
from shockctrl.errors import SpectrumInvariantViolation
from shockctrl.spectral import mode_bracket, norm_ratio_bound

# 50-digit bisection on the defining transcendental equations (mpmath, run
# once offline) frozen to double precision
LAM0_ORACLE = {0.2: 0.070495418713377292849,
               0.1: 0.00090865931015410183049,
               0.05: 8.2446151015173425321e-8}
LAMK_ORACLE_01 = {1: 2.8768043543373417337,
                  2: 3.936616525201552464,
                  8: 21.514594306084467906}
LAM1_005 = 5.1519724742099070476


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_ground_eigenvalue_matches_oracle(eps):
    p = sc.ProblemParams(eps=eps, L=1.0)
    m = sc.solve_lambda0(p)
    assert m.parity == "ground"
    assert 0.0 < m.lam < 0.25 / eps
    assert m.lam == pytest.approx(LAM0_ORACLE[eps], rel=1e-12)


def test_ground_eigenvalue_below_proof_bound():
    p = sc.ProblemParams(eps=0.1, L=1.0)
    m = sc.solve_lambda0(p)
    assert m.lam < 2.5
    assert m.lam < 2.0 / 0.1 * math.exp(-1.0 / 0.2)   # ~0.1348


def test_ground_root_exists_at_large_eps():
    # bracket endpoints keep opposite signs while (L/2 eps) tanh(L/2 eps) > 1
    m = sc.solve_lambda0(sc.ProblemParams(eps=0.35, L=1.0))
    assert 0.0 < m.lam < 0.25 / 0.35


@pytest.mark.parametrize("k", [1, 2, 8])
def test_oscillatory_eigenvalues_match_oracle(k):
    p = sc.ProblemParams(eps=0.1, L=1.0)
    m = sc.solve_lambda_k(p, k)
    assert m.lam == pytest.approx(LAMK_ORACLE_01[k], rel=1e-12)
    lo, hi = mode_bracket(p, k)
    assert lo < m.lam < hi
    assert 0.0 < m.theta < math.pi / 2.0


def test_bracket_endpoints_closed_form():
    p = sc.ProblemParams(eps=0.1, L=1.0)
    lo, hi = mode_bracket(p, 1)
    assert lo == pytest.approx(2.5 + math.pi ** 2 * 0.1 / 4.0, rel=1e-15)
    assert hi == pytest.approx(2.5 + 4.0 * math.pi ** 2 * 0.1 / 4.0, rel=1e-15)
    m = sc.solve_lambda_k(p, 1)
    assert 2.74674 < m.lam < 3.48697


def test_spectrum_ordering_and_gap(spectra):
    for eps, (p, modes) in spectra.items():
        lams = [m.lam for m in modes]
        assert all(b > a for a, b in zip(lams, lams[1:]))
        unit = math.pi ** 2 * eps / 4.0
        ratios = [abs(lams[k] - lams[j]) / (abs(k * k - j * j) * unit)
                  for k in range(1, 9) for j in range(1, k)]
        assert min(ratios) >= 1.0


def test_shifted_eigenvalues_in_heat_brackets(spectra):
    for eps, (p, modes) in spectra.items():
        unit = math.pi ** 2 * eps / 4.0
        for m in modes[1:9]:
            assert m.k ** 2 * unit <= m.mu <= (m.k + 1) ** 2 * unit


def test_ground_decay_and_monotonicity(spectra):
    vals = [spectra[eps][1][0].lam for eps in (0.2, 0.1, 0.05)]
    for eps, lam in zip((0.2, 0.1, 0.05), vals):
        assert eps * lam * math.exp(1.0 / (2.0 * eps)) <= 2.0
    assert vals[0] > vals[1] > vals[2]


def test_below_resolution_flag():
    m = sc.solve_lambda0(sc.ProblemParams(eps=0.008, L=1.0))
    assert m.below_resolution
    assert m.lam == 0.0


# ---------------- eigenfunctions ----------------

def test_dirichlet_endpoints(spectra):
    p, modes = spectra[0.1]
    x = np.linspace(-1.0, 1.0, 801)
    for m in modes[:5]:
        vals = sc.eval_eigenfunction(m, p, x)
        interior = np.max(np.abs(vals))
        assert abs(vals[0]) <= 1e-12 * interior
        assert abs(vals[-1]) <= 1e-12 * interior


def test_normalized_derivative_at_left_boundary(spectra):
    # psi_hat'(-L) = 1/eps by construction
    for eps in (0.1, 0.05):
        p, modes = spectra[eps]
        h = 1e-7
        for m in modes[:4]:
            d = (sc.eval_eigenfunction(m, p, -1.0 + h)
                 - sc.eval_eigenfunction(m, p, -1.0)) / h
            assert d == pytest.approx(1.0 / eps, rel=1e-4)


def test_ground_plateau():
    p = sc.ProblemParams(eps=0.05, L=1.0)
    m = sc.solve_lambda0(p)
    x = np.linspace(-0.8, 0.8, 1024)
    vals = sc.eval_eigenfunction(m, p, x)
    assert np.max(np.abs(vals - 1.0)) < 0.05


@pytest.mark.parametrize("k,crossings", [(1, 1), (2, 2), (3, 3)])
def test_interior_zero_crossings(k, crossings, spectra):
    p, modes = spectra[0.1]
    x = np.linspace(-1.0, 1.0, 4096)[1:-1]
    v = sc.eval_eigenfunction(modes[k], p, x)
    v = v[np.abs(v) > 1e-13]
    assert int(np.sum(np.diff(np.sign(v)) != 0)) == crossings


def test_parity_tags_match_function_parity(spectra):
    p, modes = spectra[0.1]
    x = np.linspace(0.05, 0.95, 64)
    for m in modes[1:5]:
        v_pos = sc.eval_eigenfunction(m, p, x)
        v_neg = sc.eval_eigenfunction(m, p, -x)
        sign = 1.0 if m.parity == "even" else -1.0
        assert np.allclose(v_neg, sign * v_pos, rtol=1e-10, atol=1e-12)


def test_norm_ratio_bounds(spectra):
    for eps in (0.2, 0.1, 0.05):
        p, modes = spectra[eps]
        for m in modes[:9]:
            assert sc.norm_ratio(m, p) <= norm_ratio_bound(m, p)


def test_norm_ratio_values_at_reference_point(spectra):
    p, modes = spectra[0.1]
    assert sc.norm_ratio(modes[0], p) <= 2.0 * math.sqrt(2.0)
    assert sc.norm_ratio(modes[1], p) <= 4.0 / (math.pi * math.sqrt(0.1))


def test_ground_norm_ratio_approaches_limit(spectra):
    # psi_hat_0 -> 1 in L2, so the ratio tends to sqrt(2L)
    vals = [sc.norm_ratio(spectra[eps][1][0], spectra[eps][0])
            for eps in (0.2, 0.1, 0.05)]
    target = math.sqrt(2.0)
    assert abs(vals[-1] - target) < abs(vals[0] - target)
    assert abs(vals[-1] - target) / target < 0.10


def test_spectrum_export_csv(tmp_path, spectra):
    p, modes = spectra[0.1]
    path = tmp_path / "spec.csv"
    sc.spectral.export_spectrum_csv(modes[:9], p, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,lambda,mu,theta,parity,norm_ratio"
    assert len(lines) == 10
    assert float(lines[1].split(",")[1]) == pytest.approx(modes[0].lam, rel=1e-15)


def test_solve_lambda_k_rejects_k0():
    with pytest.raises(ValueError):
        sc.solve_lambda_k(sc.ProblemParams(eps=0.1), 0)


def test_spectrum_invariant_error_type():
    with pytest.raises((SpectrumInvariantViolation, ValueError)):
        sc.spectrum(sc.ProblemParams(eps=0.1), 0)
