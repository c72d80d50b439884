"""Shared fixtures; expensive objects are built once per session."""

import math

import numpy as np
import pytest

import shockctrl as sc

T_STAR = 4.0 * math.sqrt(3.0)
EPS_GRID = (0.2, 0.1, 0.05)


def unit_sine(n=4097, L=1.0):
    x = np.linspace(-L, L, n)
    u = np.sin(np.pi * x / L)
    u[0] = u[-1] = 0.0
    return x, u / np.sqrt(np.trapezoid(u ** 2, x))


def unit_bump(n=4097, L=1.0, center=0.0, width=1.0):
    x = np.linspace(-L, L, n)
    arg = (x - center) / (width * L)
    u = np.where(np.abs(arg) < 1.0,
                 np.exp(-1.0 / np.maximum(1.0 - arg ** 2, 1e-300)), 0.0)
    u[0] = u[-1] = 0.0
    return x, u / np.sqrt(np.trapezoid(u ** 2, x))


@pytest.fixture(scope="session")
def spectra():
    """Modes 0..32 for the eps grid at L = 1."""
    out = {}
    for eps in EPS_GRID:
        p = sc.ProblemParams(eps=eps, L=1.0)
        out[eps] = (p, sc.spectrum(p, 32))
    return out


@pytest.fixture(scope="session")
def acceptance_family():
    """The family at the bi-orthogonality acceptance point (eps=0.1, T~=7, K=6)."""
    p = sc.ProblemParams(eps=0.1, L=1.0)
    spec = sc.rescale(p, 7.0, 6)
    mult = sc.choose_multiplier(spec.S, p.kappa_mult, eta_max=float(spec.eta[-1]))
    fam = sc.build_family(spec, mult, K=6, tol=1e-6)
    return p, spec, mult, fam


@pytest.fixture(scope="session")
def certification_scenario():
    """Criterion-7 setup: eps=0.1, T=1.5 T*, u0 = unit sine, both solvers,
    simulation on 2048 nodes with duality-grade time resolution."""
    T = 1.5 * T_STAR
    p = sc.ProblemParams(eps=0.1, L=1.0, T=T)
    x, u0 = unit_sine()
    sig = sc.synthesize(p, x, u0, K=16, solver="biorth")
    sig_gram = sc.synthesize(p, x, u0, K=16, solver="gram")
    grid = sc.make_grid(p, 2048)
    un = np.interp(grid.nodes, x, u0)
    modes = sc.spectrum(p, 4)
    snaps = np.linspace(0.0, T, 25)[1:]
    res = sc.simulate(p, un, sig, grid, 0.006, snapshot_times=snaps,
                      project_modes=modes)
    return {"params": p, "x": x, "u0": u0, "sig": sig, "sig_gram": sig_gram,
            "grid": grid, "un": un, "modes": modes, "result": res}


@pytest.fixture(scope="session")
def eps_sweep_controls():
    """Criterion-10 controls: the fixed scenario synthesized across the eps grid."""
    T = 1.5 * T_STAR
    x, u0 = unit_sine()
    sigs = {}
    for eps in EPS_GRID:
        p = sc.ProblemParams(eps=eps, L=1.0, T=T)
        sigs[eps] = sc.synthesize(p, x, u0, K=16)
    return x, u0, T, sigs
