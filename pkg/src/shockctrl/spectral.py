"""Eigenvalues and eigenfunctions of the adjoint of the shock-linearized operator.

The operator L u = -(tanh(x/(2 eps)) u)' - eps u'' on (-L, L) has a simple,
real, positive spectrum: one exponentially small ground eigenvalue lambda_0
below 1/(4 eps) and a sequence lambda_k > 1/(4 eps) pinned in explicit
brackets.  Conjugating by cosh(x/(2 eps)) and factoring the resulting
Schroedinger operator reduces everything to scalar transcendental equations:

    ground:       sqrt(1/4 - eps*lam) = (1/2) tanh(L/(2 eps)) tanh(sqrt(1/4 - eps*lam) L/eps)
    oscillatory:  sqrt(eps*lam - 1/4) = (eps/L) (k*pi/2 + theta(lam)),
                  theta = arctan(sqrt(4 eps lam - 1)/tanh(L/(2 eps)))

Adjoint eigenfunctions are evaluated in the normalized form
psi_hat = psi / (eps * psi'(-L)), rewritten with exponentials of argument
differences so that no intermediate exceeds the exp((|x|-L)/(2 eps)) scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (GroundRootNotBracketed, QuadratureNotConverged,
                     SpectrumInvariantViolation)
from .params import ProblemParams

__all__ = [
    "EigenMode", "solve_lambda0", "solve_lambda_k", "spectrum",
    "eval_eigenfunction", "norm_ratio", "norm_ratio_bound",
    "mode_bracket", "export_spectrum_csv",
]

# bisection width target, as a fraction of the spectral scale 1/(4 eps)
_BISECT_REL_WIDTH = 1e-13


@dataclass(frozen=True)
class EigenMode:
    """One eigenvalue of the adjoint operator with its branch metadata.

    mu = lambda - 1/(4 eps) is the shifted (heat-like) eigenvalue; theta is the
    phase of the oscillatory constraint, defined for k >= 1 only.  parity tags
    the spatial parity of the normalized eigenfunction ('ground' for k = 0).
    below_resolution marks a ground eigenvalue smaller than double precision
    can represent through 1/4 - eps*lambda.
    """

    k: int
    lam: float
    mu: float
    theta: float | None
    parity: str
    below_resolution: bool = False


def mode_bracket(params: ProblemParams, k: int) -> tuple[float, float]:
    """Open bracket containing lambda_k (k >= 1)."""
    base = 0.25 / params.eps
    unit = math.pi ** 2 * params.eps / (4.0 * params.L ** 2)
    return base + k * k * unit, base + (k + 1) ** 2 * unit


def _ground_delta_fixed_point(eps: float, L: float) -> float:
    """delta = 1/2 - sqrt(1/4 - eps*lambda_0) to full relative precision.

    Uses 1 - tanh(a) tanh(b) = (1 - tanh a) + tanh(a)(1 - tanh b) with each
    1 - tanh evaluated as 2 e^{-2y}/(1 + e^{-2y}), so the exponentially small
    root survives double arithmetic.
    """
    tL = math.tanh(L / (2.0 * eps))
    one_m_tL = 2.0 * math.exp(-L / eps) / (1.0 + math.exp(-L / eps))
    d = 0.0
    for _ in range(200):
        r = 0.5 - d
        y2 = 2.0 * r * L / eps
        one_m_t2 = 2.0 * math.exp(-y2) / (1.0 + math.exp(-y2))
        d_new = 0.5 * (one_m_tL + tL * one_m_t2)
        if d_new == d:
            break
        d = d_new
    return d


def solve_lambda0(params: ProblemParams) -> EigenMode:
    """Ground eigenvalue in (0, 1/(4 eps)) from the hyperbolic constraint.

    Bisection on the bracketed scalar equation followed by a compensated
    fixed-point polish; for eps so small that 1/4 - eps*lambda_0 rounds to
    1/4 the mode is reported as 0 with below_resolution set.
    """
    eps, L = params.eps, params.L
    hi = 0.25 / eps
    tL = math.tanh(L / (2.0 * eps))

    def g(lam):
        r = math.sqrt(max(0.25 - eps * lam, 0.0))
        return r - 0.5 * tL * math.tanh(r * L / eps)

    lo_end, hi_end = hi * 1e-300, hi * (1.0 - 1e-14)
    if g(hi_end) >= 0.0 or g(lo_end) <= 0.0:
        # interior root exists only while (L/2eps) tanh(L/2eps) > 1
        if math.tanh(L / (2 * eps)) * L / (2 * eps) <= 1.0:
            raise GroundRootNotBracketed("no interior root", eps=eps, L=L)

    lam = brentq(g, lo_end, hi_end, xtol=_BISECT_REL_WIDTH * hi,
                 rtol=8.9e-16, maxiter=300)

    # polish: recover lambda_0 = delta (1 - delta) / eps from the compensated
    # fixed point, which keeps full relative accuracy down to the double floor
    delta = _ground_delta_fixed_point(eps, L)
    lam_fp = delta * (1.0 - delta) / eps
    below = False
    if 0.25 - eps * lam_fp == 0.25:
        # exponentially small beyond machine resolution of the constraint
        lam_fp = 0.0
        below = True
    elif abs(lam_fp - lam) > 1e-6 * max(lam, lam_fp):
        raise GroundRootNotBracketed("bisection and fixed point disagree",
                                     bisect=lam, fixed_point=lam_fp)
    lam = lam_fp
    return EigenMode(k=0, lam=lam, mu=lam - 0.25 / eps, theta=None,
                     parity="ground", below_resolution=below)


def _theta(params: ProblemParams, lam: float) -> float:
    tL = math.tanh(params.L / (2.0 * params.eps))
    return math.atan(math.sqrt(max(4.0 * params.eps * lam - 1.0, 0.0)) / tL)


def solve_lambda_k(params: ProblemParams, k: int) -> EigenMode:
    """Unique eigenvalue in the k-th bracket of the oscillatory branch."""
    if k < 1:
        raise ValueError("k must be >= 1; use solve_lambda0 for the ground mode")
    eps, L = params.eps, params.L
    lo, hi = mode_bracket(params, k)

    def g(lam):
        s = math.sqrt(eps * lam - 0.25)
        return s - (eps / L) * (k * math.pi / 2.0 + _theta(params, lam))

    a = lo * (1.0 + 1e-14)
    b = hi * (1.0 - 1e-14)
    lam = brentq(g, a, b, xtol=_BISECT_REL_WIDTH * 0.25 / eps,
                 rtol=8.9e-16, maxiter=300)

    # Newton polish on the smooth constraint
    for _ in range(4):
        s = math.sqrt(eps * lam - 0.25)
        th = _theta(params, lam)
        val = s - (eps / L) * (k * math.pi / 2.0 + th)
        tL = math.tanh(L / (2.0 * eps))
        q = math.sqrt(max(4.0 * eps * lam - 1.0, 1e-300))
        dth = (2.0 * eps / q) / (tL * (1.0 + (q / tL) ** 2))
        dval = eps / (2.0 * s) - (eps / L) * dth
        step = val / dval
        lam_new = lam - step
        if not (lo < lam_new < hi):
            break
        lam = lam_new
        if abs(step) < 1e-16 * lam:
            break

    if not (lo < lam < hi):
        raise SpectrumInvariantViolation("root escaped its bracket",
                                         k=k, lam=lam, lo=lo, hi=hi)
    th = _theta(params, lam)
    if not (0.0 < th < math.pi / 2.0):
        raise SpectrumInvariantViolation("theta outside (0, pi/2)", k=k, theta=th)
    return EigenMode(k=k, lam=lam, mu=lam - 0.25 / eps, theta=th,
                     parity="even" if k % 2 == 0 else "odd")


def spectrum(params: ProblemParams, K: int) -> list[EigenMode]:
    """Modes 0..K in increasing order, with bracket and gap invariants checked."""
    if K < 1:
        raise ValueError("K must be >= 1")
    modes = [solve_lambda0(params)] + [solve_lambda_k(params, k) for k in range(1, K + 1)]
    unit = math.pi ** 2 * params.eps / (4.0 * params.L ** 2)
    for m in modes[1:]:
        lo, hi = mode_bracket(params, m.k)
        if not (lo < m.lam < hi):
            raise SpectrumInvariantViolation("bracket violated", k=m.k, lam=m.lam)
    for i in range(1, K + 1):
        for j in range(1, i):
            gap = abs(modes[i].lam - modes[j].lam)
            if gap < abs(i * i - j * j) * unit:
                raise SpectrumInvariantViolation("gap violated", j=j, k=i,
                                                 gap=gap, bound=abs(i * i - j * j) * unit)
    lams = [m.lam for m in modes]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise SpectrumInvariantViolation("spectrum not increasing")
    return modes


# --------------------------------------------------------------------------
# normalized adjoint eigenfunctions psi_hat = psi / (eps psi'(-L))
# --------------------------------------------------------------------------

def _eval_ground(mode: EigenMode, params: ProblemParams, x: np.ndarray) -> np.ndarray:
    """Ground eigenfunction, overflow- and cancellation-safe.

    psi_hat = cosh(x/2e) cosh(s x/e) (-B)/D with
    B = -s + (|tanh(x/2e)|/2) tanh(s|x|/e) expanded into three exponentially
    small terms, and D = -eps psi'(-L) in a two-positive-term closed form.
    """
    eps, L = params.eps, params.L
    s = math.sqrt(max(0.25 - eps * mode.lam, 0.0))
    ax = np.abs(x)

    # D = s^2 cosh(L/2e)/sinh(sL/e) + (1/4) sinh(sL/e)/cosh(L/2e)
    c_over_s = math.exp((0.5 - s) * L / eps) * (1.0 + math.exp(-L / eps)) \
        / (1.0 - math.exp(-2.0 * s * L / eps))
    D = s * s * c_over_s + 0.25 / c_over_s

    t_abs = np.tanh(ax / (2.0 * eps))
    term1 = eps * mode.lam / (s + 0.5)
    term2 = np.exp(-ax / eps) / (1.0 + np.exp(-ax / eps))
    term3 = t_abs * np.exp(-2.0 * s * ax / eps) / (1.0 + np.exp(-2.0 * s * ax / eps))
    neg_b = -(term1 - term2 - term3)          # -B >= 0, exactly 0 at |x| = L

    expo = (0.5 + s) * ax / eps \
        + np.log1p(np.exp(-ax / eps)) + np.log1p(np.exp(-2.0 * s * ax / eps)) \
        - math.log(4.0) - math.log(D)
    return np.exp(expo) * neg_b


def _eval_oscillatory(mode: EigenMode, params: ProblemParams, x: np.ndarray) -> np.ndarray:
    """psi_hat for k >= 1 via the trigonometric factored form.

    cosh(x/2e)/cosh(L/2e) is computed as exp((|x|-L)/(2e)) times bounded
    correction factors, so nothing exceeds that scale.
    """
    eps, L = params.eps, params.L
    k = mode.k
    w = math.sqrt(eps * mode.lam - 0.25) / eps
    t = np.tanh(x / (2.0 * eps))
    tL = math.tanh(L / (2.0 * eps))

    if k % 2 == 1:
        f = np.cos(w * x)
        fp = -w * np.sin(w * x)
        f_mL, fp_mL = math.cos(w * L), w * math.sin(w * L)
    else:
        f = np.sin(w * x)
        fp = w * np.cos(w * x)
        f_mL, fp_mL = -math.sin(w * L), w * math.cos(w * L)

    phi = -eps * fp + 0.5 * t * f
    sech2 = 1.0 / math.cosh(L / (2.0 * eps)) ** 2
    # phi' = eps w^2 f + (1 - t^2)/(4 eps) f + (t/2) f', at x = -L
    phip_mL = eps * w * w * f_mL + sech2 / (4.0 * eps) * f_mL - 0.5 * tL * fp_mL

    ax = np.abs(x)
    cosh_ratio = np.exp((ax - L) / (2.0 * eps)) \
        * (1.0 + np.exp(-ax / eps)) / (1.0 + math.exp(-L / eps))
    return cosh_ratio * phi / (eps * phip_mL)


def eval_eigenfunction(mode: EigenMode, params: ProblemParams, x) -> np.ndarray | float:
    """Normalized adjoint eigenfunction psi_hat_k(x); total on [-L, L]."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if mode.k == 0:
        out = _eval_ground(mode, params, xa)
    else:
        out = _eval_oscillatory(mode, params, xa)
    return float(out[0]) if scalar else out


def norm_ratio_bound(mode: EigenMode, params: ProblemParams) -> float:
    """Analytic upper bound for ||psi_hat||: 2 sqrt(2L) for the ground mode,
    4L/(k pi sqrt(eps)) above."""
    if mode.k == 0:
        return 2.0 * math.sqrt(2.0 * params.L)
    return 4.0 * params.L / (mode.k * math.pi * math.sqrt(params.eps))


@lru_cache(maxsize=4096)
def _norm_ratio_cached(k: int, lam: float, eps: float, L: float) -> float:
    params = ProblemParams(eps=eps, L=L)
    mode = EigenMode(k=k, lam=lam, mu=lam - 0.25 / eps,
                     theta=None if k == 0 else 0.1,
                     parity="ground" if k == 0 else ("even" if k % 2 == 0 else "odd"))
    # rebuild theta properly for evaluation (only parity/lam matter there)
    if k >= 1:
        mode = EigenMode(k=k, lam=lam, mu=mode.mu, theta=_theta(params, lam),
                         parity=mode.parity)

    def f(xx):
        return eval_eigenfunction(mode, params, xx) ** 2

    tol = 1e-10
    total = 0.0
    err = 0.0
    # forced panel split at the shock location x = 0
    for a, b in ((-L, 0.0), (0.0, L)):
        val, e = quad(f, a, b, epsabs=tol, epsrel=1e-11, limit=400)
        total += val
        err += e
    if err > 1e-6 * max(total, 1e-30):
        raise QuadratureNotConverged("norm quadrature did not converge",
                                     estimate=err, value=total)
    return math.sqrt(total)


def norm_ratio(mode: EigenMode, params: ProblemParams) -> float:
    """||psi_hat||_{L2(-L,L)} by adaptive quadrature; asserts the analytic bound."""
    val = _norm_ratio_cached(mode.k, mode.lam, params.eps, params.L)
    bound = norm_ratio_bound(mode, params)
    if val > bound * (1.0 + 1e-9):
        raise SpectrumInvariantViolation("norm ratio exceeds analytic bound",
                                         k=mode.k, value=val, bound=bound)
    return val


def export_spectrum_csv(modes: list[EigenMode], params: ProblemParams, path) -> None:
    """CSV with header k,lambda,mu,theta,parity,norm_ratio (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda", "mu", "theta", "parity", "norm_ratio"])
        for m in modes:
            nr = norm_ratio(m, params)
            w.writerow([m.k, f"{m.lam:.17g}", f"{m.mu:.17g}",
                        "" if m.theta is None else f"{m.theta:.17g}",
                        m.parity, f"{nr:.17g}"])
