"""Bi-orthogonal family to the shifted-mode exponentials on a centered interval.

Rescaling time by alpha = pi^2 eps/(4 L^2) sends the shifted eigenvalues
mu_k to eta_k = mu_k/alpha with eta_k in [k^2, (k+1)^2], the normalized
setting in which the family is built: cardinal products Phi_k vanishing at
i*eta_j (j != k), a band-limited multiplier taming their real-axis growth,
and a Paley-Wiener inversion producing time functions p_k supported in
[-beta/2, beta/2].  Back in original time, q_k(t) = alpha * p_k(alpha t)
satisfies  int e^{mu_j t} q_k dt = delta_jk  on (-T~/2, T~/2).

A finite-section Gram solver over the same exponentials provides an
independent oracle for the moment problem.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .errors import FamilyRejected, GramIllConditioned, MultiplierEvalOverflow
from .multiplier import Multiplier, choose_multiplier
from .params import ProblemParams
from .spectral import EigenMode, spectrum

__all__ = [
    "RescaledSpectrum", "rescale", "cardinal_product_log", "BiorthFamily",
    "build_family", "gram_moment_solve", "GramSolution",
    "export_family_csv", "export_residual_json",
]

_NFFT_CAP = 2 ** 22


@dataclass(frozen=True)
class RescaledSpectrum:
    """Shifted eigenvalues mapped to the normalized interval of length S."""

    S: float
    eta: np.ndarray
    mus: np.ndarray
    T_tilde: float
    alpha: float
    source: ProblemParams

    def __post_init__(self):
        eta = self.eta
        if not eta[0] < 0:
            raise ValueError(f"eta_0 must be negative, got {eta[0]}")
        L, eps = self.source.L, self.source.eps
        ref = -L ** 2 / (math.pi ** 2 * eps ** 2)
        # eta_0 = ref * (1 - 4 eps lam_0) with 4 eps lam_0 <= 8 e^{-L/(2 eps)}
        tol = abs(ref) * 8.0 * math.exp(-L / (2.0 * eps)) + 1e-9
        if abs(eta[0] - ref) > tol:
            raise ValueError(f"eta_0 = {eta[0]} far from -L^2/(pi^2 eps^2) = {ref}")
        for k in range(1, len(eta)):
            if not (k * k <= eta[k] <= (k + 1) ** 2):
                raise ValueError(f"eta_{k} = {eta[k]} outside [{k*k}, {(k+1)**2}]")
        for k in range(1, len(eta)):
            for j in range(1, k):
                if abs(eta[j] - eta[k]) < abs(j * j - k * k):
                    raise ValueError(f"eta gap violated at ({j},{k})")


def rescale(params: ProblemParams, T_tilde: float, K: int,
            modes: list[EigenMode] | None = None) -> RescaledSpectrum:
    """Rescaled interval length S and eta_0..eta_K from the spectrum."""
    if modes is None:
        modes = spectrum(params, K)
    alpha = math.pi ** 2 * params.eps / (4.0 * params.L ** 2)
    mus = np.array([m.mu for m in modes[:K + 1]])
    return RescaledSpectrum(S=alpha * T_tilde, eta=mus / alpha, mus=mus,
                            T_tilde=T_tilde, alpha=alpha, source=params)


# --------------------------------------------------------------------------
# cardinal product Phi_k
# --------------------------------------------------------------------------

def cardinal_product_log(spec: RescaledSpectrum, k: int, z, J_max: int | None = None):
    """log-magnitude and phase of the cardinal product with zeros at i*eta_j.

    Factors for j <= K use the computed eta_j; midpoints (j + 1/2)^2 stand in
    beyond, with j in (J_max, inf) summed in closed form through log-gamma, so
    the tail carries no truncation error.  Phi_k(i eta_j) = delta_jk for
    computed j by construction.
    """
    K = len(spec.eta) - 1
    if k < 1 or k > K:
        raise ValueError(f"k must be in 1..{K}")
    if J_max is None:
        J_max = max(4 * K, 64)
    if J_max < K:
        raise ValueError(f"J_max = {J_max} below the computed order K = {K}")
    za = np.atleast_1d(np.asarray(z, dtype=complex))
    lg = np.zeros(len(za), dtype=complex)
    for j in range(K + 1):
        if j == k:
            continue
        lg = lg + np.log((-1j * za - spec.eta[j]) / (spec.eta[k] - spec.eta[j]))
    b = math.sqrt(spec.eta[k])
    for j in range(K + 1, J_max + 1):
        em = (j + 0.5) ** 2
        lg = lg + np.log((em + 1j * za) / (em - spec.eta[k]))
    # closed-form remainder over j > J_max with midpoint zeros:
    #   prod ((j+1/2)^2 + i z)/((j+1/2)^2 - eta_k)
    j0 = J_max + 1
    a = np.sqrt(-1j * za)
    lg = lg + (loggamma(j0 + 0.5 - b) + loggamma(j0 + 0.5 + b)
               - loggamma(j0 + 0.5 - a) - loggamma(j0 + 0.5 + a))
    logmag = np.real(lg)
    phase = np.imag(lg)
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return float(logmag[0]), float(phase[0])
    return logmag, phase


# --------------------------------------------------------------------------
# family construction
# --------------------------------------------------------------------------

@dataclass
class BiorthFamily:
    """Time-sampled family q_k on a uniform grid over [-T~/2, T~/2].

    residual_matrix[j, k-1] holds int e^{mu_j t} q_k dt - delta_jk computed by
    trapezoid on the stored grid; verified[j] marks rows whose weight
    e^{mu_j t} keeps the double-precision sampling noise below the gate.
    norm_bounds are the measured L2 norms.
    """

    t: np.ndarray
    q: np.ndarray                   # shape (K, len(t)), rows k = 1..K
    spec: RescaledSpectrum
    mult: Multiplier
    residual_matrix: np.ndarray     # shape (J+1, K)
    verified: np.ndarray            # shape (J+1,), bool
    row_noise: np.ndarray           # estimated verification noise per row
    norm_bounds: np.ndarray         # ||q_k||, k = 1..K
    support_edge: float             # q-time half-support beta/(2 alpha)
    tol: float
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.q.shape[0]

    @property
    def max_verified_residual(self) -> float:
        if not np.any(self.verified):
            return math.inf
        return float(np.max(np.abs(self.residual_matrix[self.verified, :])))

    def norm_shape_constants(self) -> np.ndarray:
        """||q_k|| mu_k exp(-3 kappa L^2/(eps T~)): finite, 1/mu_k-shape check."""
        p = self.spec.source
        damp = math.exp(-3.0 * self.mult.kappa * p.L ** 2 / (p.eps * self.spec.T_tilde))
        return self.norm_bounds * self.spec.mus[1:] * damp

    def moments_of(self, coeffs: np.ndarray) -> np.ndarray:
        """Moments of sum_k coeffs[k-1] q_k against each e^{mu_j t} via the
        residual matrix (delta + residual), avoiding re-integration."""
        base = np.zeros(len(self.spec.mus))
        base[1:1 + len(coeffs)] = coeffs
        return base + self.residual_matrix @ coeffs


def _zero_edge_noise(p: np.ndarray, tp: np.ndarray, edge: float,
                     cut: float) -> float:
    """Zero sub-floor samples from each support edge inward (first above-cut
    sample stops the scan).  Returns the largest |t| of a kept sample."""
    inside = np.nonzero(np.abs(tp) < edge)[0]
    if len(inside) == 0:
        return 0.0
    t_keep = 0.0
    for idx in (inside, inside[::-1]):
        stopped = None
        for i in idx:
            if abs(p[i]) >= cut:
                stopped = i
                break
            p[i] = 0.0
        if stopped is not None:
            t_keep = max(t_keep, abs(tp[stopped]))
    return t_keep


def _fourier_grid(spec: RescaledSpectrum, mult: Multiplier):
    """Uniform x-grid, FFT size and keep-bandwidth from the tail-envelope rule."""
    S, nu, delta = spec.S, mult.nu, mult.delta
    # envelope exp(3 nu/4 - (delta/(2 sqrt 2)) sqrt(X)) below 1e-12 of its peak
    X = ((0.75 * nu + 27.63) / (delta / (2.0 * math.sqrt(2.0)))) ** 2
    dx = math.pi / (2.0 * S)
    n = 2 ** 12
    while n * dx < 2.3 * X and n < _NFFT_CAP:
        n *= 2
    if n * dx < 2.3 * X:
        raise MultiplierEvalOverflow(
            "required Fourier bandwidth exceeds the cap; increase the horizon "
            "margin (delta too small)", X=X, cap=_NFFT_CAP * dx / 2.3)
    return (np.arange(n) - n // 2) * dx, dx, n, 1.15 * X


def _cardinal_shared(spec: RescaledSpectrum, z: np.ndarray, K: int, J_max: int):
    """z-dependent pieces of log Phi_k shared by every k: the per-j factor
    logs, the midpoint-factor sum and the log-gamma tail."""
    logs_j = [np.log(-1j * z - spec.eta[j]) for j in range(K + 1)]
    mid = np.zeros(len(z), dtype=complex)
    for j in range(K + 1, J_max + 1):
        mid = mid + np.log((j + 0.5) ** 2 + 1j * z)
    a = np.sqrt(-1j * z)
    j0 = J_max + 1
    tail = -loggamma(j0 + 0.5 - a) - loggamma(j0 + 0.5 + a)
    return logs_j, mid, tail


def _cardinal_from_shared(spec: RescaledSpectrum, k: int, shared, J_max: int):
    logs_j, mid, tail = shared
    K = len(logs_j) - 1
    lg = mid + tail
    for j in range(K + 1):
        if j == k:
            continue
        lg = lg + logs_j[j] - math.log(abs(spec.eta[k] - spec.eta[j])) \
            - (1j * math.pi if spec.eta[k] < spec.eta[j] else 0.0)
    for j in range(K + 1, J_max + 1):
        lg = lg - math.log((j + 0.5) ** 2 - spec.eta[k])
    b = math.sqrt(spec.eta[k])
    j0 = J_max + 1
    lg = lg + loggamma(j0 + 0.5 - b) + loggamma(j0 + 0.5 + b)
    return np.real(lg), np.imag(lg)


def build_family(spec: RescaledSpectrum, mult: Multiplier | None = None,
                 K: int | None = None, tol: float = 1e-6,
                 J_max: int | None = None) -> BiorthFamily:
    """Construct q_1..q_K by Paley-Wiener inversion of Phi_k * H(./2).

    Each p_k is synthesized on the FFT dual grid, windowed to its analytic
    support, and rescaled to original time.  The residual matrix is filled by
    trapezoid with the row maximum factored out; rows whose exponential weight
    amplifies sampling noise past the gate are reported but excluded from it.
    """
    if K is None:
        K = len(spec.eta) - 1
    if K > len(spec.eta) - 1:
        raise ValueError("K exceeds the rescaled spectrum order")
    if mult is None:
        mult = choose_multiplier(spec.S, spec.source.kappa_mult,
                                 eta_max=float(spec.eta[K]))
    xg, dx, n, x_keep = _fourier_grid(spec, mult)
    # H is even in its real argument: evaluate on |x| once (within the kept
    # bandwidth; the envelope rule already discards what lies beyond) and
    # index back
    n_half = min(n // 2, int(x_keep / dx) + 1)
    half_vals = np.arange(n_half + 1) * dx
    logH_h, sgnH_h = mult.log_abs_real(half_vals / 2.0)
    logH_h = np.concatenate((logH_h, np.full(n // 2 - n_half, -np.inf)))
    sgnH_h = np.concatenate((sgnH_h, np.zeros(n // 2 - n_half)))
    mirror = np.abs(np.arange(n) - n // 2)
    logH = logH_h[mirror]
    sgnH = sgnH_h[mirror]
    keep = sgnH != 0.0
    xk = xg[keep]

    dtp = 2.0 * math.pi / (n * dx)
    tp = np.arange(n) * dtp
    tp[tp > n * dtp / 2.0] -= n * dtp
    order = np.argsort(tp)
    tp = tp[order]

    alpha = spec.alpha
    tq = tp / alpha
    inside = np.abs(tq) <= spec.T_tilde / 2.0
    t_out = tq[inside]
    edge = mult.beta / (2.0 * alpha)

    leakage = 0.0
    cut_scale = 0.0
    t_keep_max = 0.0
    if J_max is None:
        J_max = max(4 * K, 64)
    shared = _cardinal_shared(spec, xk, K, J_max)
    q_rows = np.empty((K, len(t_out)))
    for k in range(1, K + 1):
        lp_mag, lp_ph = _cardinal_from_shared(spec, k, shared, J_max)
        log_norm = mult.log_imag_axis(spec.eta[k] / 2.0)
        g = np.zeros(n, dtype=complex)
        g[keep] = sgnH[keep] * np.exp(lp_mag + logH[keep] - log_norm
                                      + 1j * lp_ph)
        p = np.real(np.fft.ifft(np.fft.ifftshift(g))) * n * dx / (2.0 * math.pi)
        p = p[order]
        # reconstruction support check before any windowing: energy beyond
        # the interval half-length S/2 must be reconstruction noise only
        out_half = np.abs(tp) > spec.S / 2.0
        leakage = max(leakage,
                      float(np.trapezoid((p * out_half) ** 2, tp)
                            / np.trapezoid(p ** 2, tp)))
        p[np.abs(tp) >= mult.beta / 2.0] = 0.0
        # samples below the synthesis noise floor are pure rounding noise;
        # amplified by e^{mu_J t} at the support edge they would dominate the
        # high moments, while the true values there are even smaller (the
        # envelope decays monotonically into the edge), so zero them inward
        # from each edge until the first sample above the cut.
        floor_cut = 100.0 * 1.1e-16 * float(np.trapezoid(np.abs(g), xg)) / (2.0 * math.pi)
        t_keep = _zero_edge_noise(p, tp, mult.beta / 2.0, floor_cut)
        cut_scale = max(cut_scale, floor_cut * alpha)
        t_keep_max = max(t_keep_max, t_keep / alpha)
        q_rows[k - 1] = alpha * p[inside]

    # residual matrix by trapezoid with the exponential weights
    J = len(spec.eta) - 1
    dt_q = t_out[1] - t_out[0]
    qmax = float(np.max(np.abs(q_rows))) if K else 0.0
    weights = np.stack([np.exp(np.clip(spec.mus[j] * t_out, -745.0, 700.0))
                        for j in range(J + 1)])

    def residuals(rows):
        r = np.zeros((J + 1, K))
        for j in range(J + 1):
            for k in range(1, K + 1):
                r[j, k - 1] = np.trapezoid(weights[j] * rows[k - 1], t_out) \
                    - (1.0 if j == k else 0.0)
        return r

    res_raw = residuals(q_rows)

    # verification noise model: samples kept at the zeroing cut carry absolute
    # errors up to the cut size, weighted by e^{|mu_j| t}; below the cut the
    # true envelope bounds the discarded mass by the same quantity
    noise = np.zeros(J + 1)
    for j in range(J + 1):
        amp = math.exp(min(abs(spec.mus[j]) * t_keep_max, 700.0))
        width = min(1.0 / max(abs(spec.mus[j]), 1e-9), 2.0 * edge)
        noise[j] = amp * (3.0 * cut_scale * width
                          + 1e-16 * qmax * math.sqrt(dt_q * 2.0 * edge))

    # the raw construction must stand on its own before the in-span moment
    # corrector may absorb the double-precision verification floor
    raw_gate = np.maximum(50.0 * tol, 10.0 * noise)
    bad = np.abs(res_raw) > raw_gate[:, None]
    if np.any(bad):
        jj, kk = np.unravel_index(np.argmax(np.abs(res_raw) / raw_gate[:, None]),
                                  bad.shape)
        raise FamilyRejected("raw bi-orthogonality residual above the "
                             "construction gate", j=int(jj), k=int(kk) + 1,
                             residual=float(res_raw[jj, kk]),
                             gate=float(raw_gate[jj]))

    # corrector: remove the measured residual with a small element of
    # span{e^{mu_j t}} whose trapezoid moments are computed on the same grid,
    # so the sampled family satisfies the moment identities to solver accuracy.
    # Rows whose exponential weight exceeds the double-precision enforcement
    # range are left as constructed and only reported.
    enforce = noise < 1e3 * tol
    corr_size = 0.0
    res = res_raw
    # corrector basis: exponentials windowed to the family's own support, so
    # the correction neither leaks outside [-beta/2, beta/2] nor excites the
    # unenforceable high rows through the interval endpoints
    inside_supp = np.abs(t_out) < edge * (1.0 - 1e-12)
    bump = np.zeros_like(t_out)
    bump[inside_supp] = np.exp(1.0 - 1.0 / (1.0 - (t_out[inside_supp] / edge) ** 2))
    for _ in range(J + 2):
        idx = np.nonzero(enforce)[0]
        if len(idx) == 0:
            break
        basis = bump[None, :] * np.exp(
            spec.mus[idx, None] * t_out[None, :]
            - np.abs(spec.mus[idx, None]) * edge)
        M = np.empty((len(idx), len(idx)))
        for a, j in enumerate(idx):
            for b in range(len(idx)):
                M[a, b] = np.trapezoid(weights[j] * basis[b], t_out)
        row_scale = 1.0 / np.max(np.abs(M), axis=1)
        coef = np.linalg.solve(M * row_scale[:, None],
                               -res_raw[idx] * row_scale[:, None])
        trial = q_rows + coef.T @ basis
        res = residuals(trial)
        worse = np.abs(res[idx]).max(axis=1) > \
            np.maximum(tol, 2.0 * np.abs(res_raw[idx]).max(axis=1))
        if not np.any(worse):
            q_rows = trial
            corr_size = float(np.max(np.abs(coef)))
            break
        # enforcement backfired on the most weighted offending row: drop it
        drop = idx[np.argmax(np.abs(res[idx]).max(axis=1) * worse)]
        enforce[drop] = False
        res = res_raw
    else:
        res = residuals(q_rows)
    # a row counts as verified once its moments are enforced and measure
    # within tolerance on the stored grid
    verified = enforce & (np.max(np.abs(res), axis=1) <= tol)

    fam = BiorthFamily(
        t=t_out, q=q_rows, spec=spec, mult=mult,
        residual_matrix=res, verified=verified, row_noise=noise,
        norm_bounds=np.sqrt(np.trapezoid(q_rows ** 2, t_out, axis=1)),
        support_edge=edge, tol=tol,
        meta={"nfft": n, "dx": dx, "J_max": J_max,
              "support_leakage": leakage,
              "enforced_rows": [int(j) for j in idx],
              "raw_residual_max": float(np.max(np.abs(res_raw))),
              "corrector_size": corr_size})

    bad_rows = np.abs(res[enforce]) > tol
    if np.any(bad_rows):
        jj, kk = np.unravel_index(np.argmax(np.abs(res[enforce])), bad_rows.shape)
        raise FamilyRejected("bi-orthogonality residual above tolerance",
                             j=int(idx[jj]), k=int(kk) + 1,
                             residual=float(res[idx[jj], kk]), tol=tol)
    return fam


def support_leakage(fam: BiorthFamily) -> float:
    """Worst energy fraction of the raw reconstructions outside [-S/2, S/2],
    measured on the full FFT range before windowing."""
    return float(fam.meta["support_leakage"])


# --------------------------------------------------------------------------
# Gram oracle for the moment problem
# --------------------------------------------------------------------------

@dataclass
class GramSolution:
    """Minimal-norm element of span{e^{mu_j t}} matching prescribed moments."""

    mus: np.ndarray
    coeffs: np.ndarray          # over scaled exponentials exp(mu t - |mu| T/2)
    T_tilde: float
    condition: float

    def __call__(self, t):
        ta = np.asarray(t, dtype=float)
        scale = self.mus[:, None] * ta[None, ...] - \
            np.abs(self.mus)[:, None] * self.T_tilde / 2.0
        return np.tensordot(self.coeffs, np.exp(scale), axes=(0, 0))

    def moments(self) -> np.ndarray:
        G = _scaled_gram(self.mus, self.T_tilde)
        s = np.exp(-np.abs(self.mus) * self.T_tilde / 2.0)
        return (G @ self.coeffs) / s

    def norm(self) -> float:
        G = _scaled_gram(self.mus, self.T_tilde)
        return math.sqrt(float(self.coeffs @ G @ self.coeffs))


def _pair_integral(m: float, T: float) -> float:
    if abs(m) * T < 1e-12:
        return T
    return (math.exp(m * T / 2.0) - math.exp(-m * T / 2.0)) / m


def _scaled_gram(mus: np.ndarray, T: float) -> np.ndarray:
    n = len(mus)
    s = np.exp(-np.abs(mus) * T / 2.0)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            m = mus[i] + mus[j]
            # log-compensated s_i s_j I(m), I(m) = 2 sinh(|m| T/2)/|m|; the
            # combined exponent |m|T/2 - (|mu_i|+|mu_j|)T/2 is never positive
            if abs(m) * T < 1e-12:
                v = T * s[i] * s[j]
            else:
                lead = (abs(m) - abs(mus[i]) - abs(mus[j])) * T / 2.0
                v = math.exp(lead) * (1.0 - math.exp(-abs(m) * T)) / abs(m)
            G[i, j] = G[j, i] = v
    return G


def gram_moment_solve(mus, targets, T_tilde: float,
                      cond_limit: float = 1e12) -> GramSolution:
    """Solve the finite moment problem through an orthonormalized basis.

    Stabilized Gram-Schmidt with one reorthogonalization pass runs on
    coefficient vectors over the scaled exponentials, with inner products from
    the closed-form Gram matrix; the R-diagonal ratio squared estimates the
    Gram condition, gated at cond_limit.
    """
    mus = np.asarray(mus, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(mus) != len(targets):
        raise ValueError("one target per mode required")
    n = len(mus)
    s = np.exp(-np.abs(mus) * T_tilde / 2.0)
    G = _scaled_gram(mus, T_tilde)

    U = np.zeros((n, n))
    r_diag = np.zeros(n)
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):                      # MGS + reorthogonalization
            for a in range(i):
                v -= (U[:, a] @ (G @ v)) * U[:, a]
        r = math.sqrt(max(float(v @ G @ v), 0.0))
        r_diag[i] = r
        if r <= 0.0:
            raise GramIllConditioned("exactly dependent exponentials", index=i)
        U[:, i] = v / r
    # condition of the unscaled moment map: the scaled-basis estimate divided
    # by the square of the smallest row scale (rows with |mu| T/2 beyond the
    # double-precision exponent range are unreachable however the solve is
    # formulated)
    cond = (float(np.max(r_diag)) / float(np.min(r_diag))) ** 2 \
        / float(np.min(s)) ** 2
    if cond > cond_limit:
        raise GramIllConditioned("reduce the number of modes",
                                 condition=cond, limit=cond_limit)

    t_tilde = s * targets                       # <h, scaled e_j> constraints
    coeffs = U @ (U.T @ t_tilde)
    return GramSolution(mus=mus, coeffs=coeffs, T_tilde=T_tilde, condition=cond)


# --------------------------------------------------------------------------
# exports
# --------------------------------------------------------------------------

def export_family_csv(fam: BiorthFamily, path_pattern: str) -> list[str]:
    """One CSV per k with columns t,q_k(t); '{k}' in the pattern is filled in."""
    paths = []
    for k in range(1, fam.K + 1):
        path = path_pattern.format(k=k)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", f"q_{k}(t)"])
            for tt, qq in zip(fam.t, fam.q[k - 1]):
                w.writerow([f"{tt:.17g}", f"{qq:.17g}"])
        paths.append(path)
    return paths


def export_residual_json(fam: BiorthFamily, path) -> None:
    payload = {
        "J": int(fam.residual_matrix.shape[0] - 1),
        "K": int(fam.K),
        "max_abs": fam.max_verified_residual,
        "entries": [[float(v) for v in row] for row in fam.residual_matrix],
        "verified_rows": [bool(b) for b in fam.verified],
        "row_noise_estimate": [float(v) for v in fam.row_noise],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
