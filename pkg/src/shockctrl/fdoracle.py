"""Finite-difference verification oracle for the adjoint operator's spectrum.

Used only by tests: assembles the operator on a uniform grid and eigensolves,
independently of the transcendental root-finding path.  Three assemblies are
provided: the symmetric tridiagonal conjugated form, the raw non-symmetric
form of the adjoint operator, and a factored first-order form whose smallest
singular value resolves the exponentially small ground eigenvalue to relative
(not absolute) accuracy.  Richardson extrapolation across grid levels removes
the h^2 discretization bias.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import GridTooCoarse
from .params import ProblemParams

__all__ = [
    "discretized_operator_oracle", "symmetric_tridiagonal",
    "nonsymmetric_tridiagonal", "richardson_eigenvalues",
    "ground_eigenvalue_fd",
]


def _check_resolution(params: ProblemParams, n: int) -> None:
    if n < 256:
        raise GridTooCoarse("need n >= 256", n=n)
    if n * params.eps / params.L < 50.0:
        raise GridTooCoarse("grid does not resolve the layer",
                            n=n, eps=params.eps, required=50.0 * params.L / params.eps)


def symmetric_tridiagonal(params: ProblemParams, n: int):
    """Diagonal and off-diagonal of the conjugated operator P/eps (Dirichlet).

    P = -eps^2 d_xx - 1/4 + tanh^2(x/2 eps)/2; spectrum identical to the
    adjoint operator's.
    """
    eps, L = params.eps, params.L
    x = np.linspace(-L, L, n)
    h = x[1] - x[0]
    xi = x[1:-1]
    V = (-0.25 + 0.5 * np.tanh(xi / (2.0 * eps)) ** 2) / eps
    d = 2.0 * eps / h ** 2 + V
    e = -eps / h ** 2 * np.ones(len(xi) - 1)
    return d, e, xi


def nonsymmetric_tridiagonal(params: ProblemParams, n: int):
    """Bands (lower, diag, upper) of the raw adjoint operator
    L* psi = tanh(x/2 eps) psi' - eps psi'' with Dirichlet rows eliminated."""
    eps, L = params.eps, params.L
    x = np.linspace(-L, L, n)
    h = x[1] - x[0]
    xi = x[1:-1]
    b = np.tanh(xi / (2.0 * eps))
    # psi' -> (psi[i+1] - psi[i-1])/(2h), psi'' -> (psi[i-1] - 2 psi[i] + psi[i+1])/h^2
    low = -b / (2.0 * h) - eps / h ** 2
    dia = 2.0 * eps / h ** 2 * np.ones(len(xi))
    upp = b / (2.0 * h) - eps / h ** 2
    return low, dia, upp, xi


def nonsymmetric_eigenvalues(params: ProblemParams, n: int, num: int) -> np.ndarray:
    """Lowest eigenvalues of the non-symmetric assembly via the diagonal
    similarity to a symmetric tridiagonal (off-diagonal products positive)."""
    low, dia, upp, _ = nonsymmetric_tridiagonal(params, n)
    prod = low[1:] * upp[:-1]
    if np.any(prod <= 0):
        raise GridTooCoarse("similarity to symmetric form lost (Peclet too large)",
                            n=n)
    off = -np.sqrt(prod)        # sign irrelevant for the spectrum
    w = eigh_tridiagonal(dia, off, select="i", select_range=(0, num - 1))[0]
    return w


def discretized_operator_oracle(params: ProblemParams, n: int, num_modes: int = 9):
    """Lowest eigenpairs of the finite-difference adjoint operator.

    Returns a list of (eigenvalue, eigenvector-on-interior-grid) pairs with the
    grid attached as the last element's companion; eigenvectors come from the
    symmetric conjugated assembly and are mapped back by the cosh factor.
    """
    _check_resolution(params, n)
    d, e, xi = symmetric_tridiagonal(params, n)
    w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, num_modes - 1))
    pairs = []
    cosh_fac = np.cosh(xi / (2.0 * params.eps))
    for i in range(num_modes):
        psi = cosh_fac * v[:, i]
        pairs.append((float(w[i]), psi))
    return pairs, xi


def richardson_eigenvalues(params: ProblemParams, num_modes: int, n: int = 4096) -> np.ndarray:
    """h^2 -> h^4 -> h^6 extrapolated eigenvalues from levels n/4, n/2, n."""
    _check_resolution(params, n // 4)
    vals = {}
    for m in (n // 4, n // 2, n):
        d, e, _ = symmetric_tridiagonal(params, m)
        vals[m] = eigh_tridiagonal(d, e, select="i",
                                   select_range=(0, num_modes - 1))[0]
    r_mid = (4.0 * vals[n] - vals[n // 2]) / 3.0
    r_low = (4.0 * vals[n // 2] - vals[n // 4]) / 3.0
    return (16.0 * r_mid - r_low) / 15.0


def _ground_level(params: ProblemParams, n: int) -> float:
    """Smallest eigenvalue at one grid level from the factored form.

    The first-order factor a = eps d/dx + tanh(x/2 eps)/2 is discretized on
    cell midpoints; the ground eigenvalue is the smallest eigenvalue of B^T B
    divided by eps, obtained by inverse iteration with the Rayleigh quotient
    evaluated through B (a positive sum of squares, hence relative accuracy).
    """
    eps, L = params.eps, params.L
    x = np.linspace(-L, L, n)
    h = x[1] - x[0]
    xm = 0.5 * (x[:-1] + x[1:])
    tm = 0.5 * np.tanh(xm / (2.0 * eps))
    lo = -eps / h + tm / 2.0    # weight of phi_j   in cell j
    up = eps / h + tm / 2.0     # weight of phi_{j+1}
    m = n - 2

    def b_mul(v):
        w = np.zeros(n)
        w[1:-1] = v
        return lo * w[:-1] + up * w[1:]

    dmain = up[:-1] ** 2 + lo[1:] ** 2
    doff = (lo[1:] * up[1:])[:-1]
    ab = np.zeros((3, m))
    ab[0, 1:] = doff
    ab[1, :] = dmain
    ab[2, :-1] = doff

    v = np.ones(m) / math.sqrt(m)
    lam = 0.0
    for _ in range(400):
        w = solve_banded((1, 1), ab, v)
        v = w / np.linalg.norm(w)
        bv = b_mul(v)
        new = float(bv @ bv)
        if abs(new - lam) < 1e-14 * max(new, 1e-300):
            lam = new
            break
        lam = new
    return lam / eps


def ground_eigenvalue_fd(params: ProblemParams, n: int = 4096) -> float:
    """Richardson-extrapolated finite-difference ground eigenvalue.

    Resolves lambda_0 to relative accuracy even when it is exponentially
    small, which the plain assembled eigensolve cannot (its arithmetic floor
    is u * ||A||, far above lambda_0 for small eps).
    """
    _check_resolution(params, n // 4)
    v = [_ground_level(params, m) for m in (n // 4, n // 2, n)]
    r_low = (4.0 * v[1] - v[0]) / 3.0
    r_mid = (4.0 * v[2] - v[1]) / 3.0
    return (16.0 * r_mid - r_low) / 15.0
