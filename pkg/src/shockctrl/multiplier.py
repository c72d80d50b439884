"""Band-limited multiplier used by the bi-orthogonal construction.

H(z) = C_nu * int_{-1}^{1} exp(-nu/(1 - t^2) - i beta t z) dt with nu =
(pi + delta)^2 / beta and C_nu fixing H(0) = 1.  It is entire of exponential
type beta, decays like exp(-(pi + delta) sqrt(|x|)) on the real axis, and
grows like exp(beta |y| / (2 sqrt(nu + 1))) at least on the imaginary axis.

On the real axis the integral loses all relative accuracy once |H| drops
below the double-precision cancellation floor, so the deep tail is evaluated
by numerical steepest descent: the contour [-1, 1] is deformed through the
two complex saddles into the lower half-plane, where the integrand has no
cancellation and plain Gauss quadrature keeps ~1e-13 relative accuracy at
any depth (in log form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .errors import MultiplierEvalOverflow

__all__ = ["Multiplier", "choose_multiplier", "h_beta"]

_GL_N = 3000         # real-axis rule (bump is smooth but needs many nodes at high nu)
_NSD_N = 128         # nodes per descent segment
_REAL_SWITCH = 25.0  # |y| above which the descent contour takes over


@dataclass(frozen=True)
class Multiplier:
    """Selected multiplier parameters with cached quadrature data.

    beta lies in (S/kappa, S); delta satisfies nu = (pi+delta)^2/beta <
    (4-delta) pi^2 kappa / (4 S).  c_nu normalizes H(0) = 1.
    """

    S: float
    kappa: float
    beta: float
    delta: float
    nu: float
    c_nu: float
    _gl: tuple = field(repr=False, default=None)
    _nsd: tuple = field(repr=False, default=None)

    # ---------------- real axis ----------------

    def _real_gl(self, y: np.ndarray) -> np.ndarray:
        t, w, f = self._gl
        return self.c_nu * np.array(
            [np.sum(w * f * np.cos(self.beta * t * yy)) for yy in y])

    def _real_nsd(self, y: np.ndarray):
        """(log|H|, sign) on the deep real tail via the descent contour.

        Saddles sit near t = -1 + sqrt(nu/(2 beta y)) e^{-i pi/4} and its
        mirror; the contour runs endpoint -> saddle -> straight down, with the
        mirror half joined through the lower half-plane where the integrand
        vanishes.
        """
        nu, beta = self.nu, self.beta
        nodes, wts = self._nsd
        logs = np.empty(len(y))
        signs = np.empty(len(y))
        chunk = 8192
        for lo in range(0, len(y), chunk):
            yy = y[lo:lo + chunk]
            u = np.sqrt(nu / (2.0 * beta * yy)) * np.exp(-1j * np.pi / 4)
            t = -1.0 + u
            for it in range(24):
                hp = -2.0 * nu * t / (1.0 - t * t) ** 2 - 1j * beta * yy
                hpp = -2.0 * nu * (1.0 + 3.0 * t * t) / (1.0 - t * t) ** 3
                dt = -hp / hpp
                t = t + dt
                if it >= 5 and np.max(np.abs(dt) / np.abs(t)) < 1e-14:
                    break
            ts_m = t
            ts_p = -np.conj(t)
            h0 = np.real(-nu / (1.0 - ts_m * ts_m) - 1j * beta * ts_m * yy)
            smax = 60.0 / (beta * yy) + 3.0 * np.abs(np.imag(ts_m))
            a = np.stack([np.full_like(ts_m, -1.0 + 0j), ts_m,
                          ts_p - 1j * smax, ts_p])
            b = np.stack([ts_m, ts_m - 1j * smax, ts_p, np.full_like(ts_m, 1.0 + 0j)])
            tot = np.zeros(len(yy), dtype=complex)
            for seg in range(4):
                mid = 0.5 * (a[seg] + b[seg])
                half = 0.5 * (b[seg] - a[seg])
                tt = mid[:, None] + half[:, None] * nodes[None, :]
                hv = -nu / (1.0 - tt * tt) - 1j * beta * tt * yy[:, None]
                tot += (np.exp(hv - h0[:, None]) @ wts) * half
            val = tot * self.c_nu
            mag = np.abs(val)
            logs[lo:lo + chunk] = np.where(mag > 0, h0 + np.log(np.maximum(mag, 1e-300)), -np.inf)
            signs[lo:lo + chunk] = np.where(mag > 0, np.sign(np.real(val)), 0.0)
        return logs, signs

    def log_abs_real(self, y):
        """(log|H(y)|, sign) for real y, hybrid quadrature/descent. Even in y."""
        ya = np.abs(np.atleast_1d(np.asarray(y, dtype=float)))
        logs = np.empty(len(ya))
        signs = np.empty(len(ya))
        small = ya <= _REAL_SWITCH
        if np.any(small):
            v = self._real_gl(ya[small])
            logs[small] = np.log(np.maximum(np.abs(v), 1e-300))
            signs[small] = np.sign(v)
        if np.any(~small):
            lg, sg = self._real_nsd(ya[~small])
            logs[~small] = lg
            signs[~small] = sg
        return logs, signs

    # ---------------- imaginary axis ----------------

    def log_imag_axis(self, y: float) -> float:
        """log H(i y): positive integrand, max-factored quadrature."""
        t, w, _ = self._gl
        expo = -self.nu / (1.0 - t * t) + self.beta * t * y
        mx = np.max(expo)
        return mx + math.log(float(np.sum(w * np.exp(expo - mx)))) + math.log(self.c_nu)

    # ---------------- general complex argument ----------------

    def eval_log(self, z: complex) -> complex:
        """log H(z) (principal magnitude + phase) by max-factored quadrature.

        Valid while the oscillatory cancellation stays above the double floor;
        raises otherwise with the attempted argument.
        """
        t, w, _ = self._gl
        expo = -self.nu / (1.0 - t * t) - 1j * self.beta * t * complex(z)
        mx = np.max(np.real(expo))
        s = np.sum(w * np.exp(expo - mx))
        mag = abs(s)
        if not np.isfinite(mag) or mag < 1e-13:
            if abs(np.imag(z)) < 1e-12:
                lg, sg = self.log_abs_real(float(np.real(z)))
                if sg[0] == 0:
                    raise MultiplierEvalOverflow("zero magnitude", z=z)
                return complex(lg[0], 0.0 if sg[0] > 0 else math.pi)
            raise MultiplierEvalOverflow("cancellation below double floor", z=z)
        return mx + math.log(self.c_nu) + np.log(s)


def choose_multiplier(S: float, kappa: float, eta_max: float | None = None,
                      amp_budget: float = 13.0,
                      delta_min: float = 0.4) -> Multiplier:
    """Select (beta, delta, nu) for interval length S and margin kappa.

    beta starts from the midpoint S (1 + 1/kappa)/2 of the admissible interval
    but is capped so that the largest moment weight exp(eta_max * beta / 2)
    stays within the double-precision verification budget; it is relaxed back
    up if the cap would push the tail-decay margin delta below delta_min
    (slow decay means an infeasible Fourier bandwidth).  delta is the largest
    value in (0, 4) with nu < (4 - delta) pi^2 kappa / (4 S).
    """
    if kappa <= 1.0:
        raise ValueError("kappa must exceed 1")
    beta_mid = S * (1.0 + 1.0 / kappa) / 2.0
    beta = beta_mid
    if eta_max is not None and eta_max > 0:
        cap = 2.0 * amp_budget / eta_max
        # smallest beta keeping delta >= delta_min admissible
        beta_floor = (math.pi + delta_min) ** 2 * 4.0 * S \
            / ((4.0 - delta_min) * math.pi ** 2 * kappa)
        beta = min(beta, max(cap, beta_floor))
    beta = min(max(beta, (S / kappa) * 1.02), S * 0.999)

    def feas(d):
        return (math.pi + d) ** 2 / beta - (4.0 - d) * math.pi ** 2 * kappa / (4.0 * S)

    if feas(1e-12) >= 0.0:
        raise MultiplierEvalOverflow(
            "no admissible delta; margin kappa too small for this interval",
            S=S, kappa=kappa, beta=beta)
    delta = brentq(feas, 1e-12, 4.0 - 1e-12) * (1.0 - 1e-9)
    # cap nu: e^{3 nu/4}-sized constants inflate the family norms and with
    # them the double-precision noise floor; the admissible-region maximum
    # is only needed for the sharp cost exponent, not for bi-orthogonality
    nu_cap = 30.0
    delta_cap = math.sqrt(nu_cap * beta) - math.pi
    if delta_cap > 0:
        delta = min(delta, delta_cap)
    nu = (math.pi + delta) ** 2 / beta

    t, w = leggauss(_GL_N)
    f = np.exp(-nu / (1.0 - t * t))
    c_nu = 1.0 / float(np.sum(w * f))
    nsd = leggauss(_NSD_N)
    return Multiplier(S=S, kappa=kappa, beta=beta, delta=delta, nu=nu,
                      c_nu=c_nu, _gl=(t, w, f), _nsd=nsd)


def h_beta(mult: Multiplier, z: complex) -> complex:
    """log-scaled H at a complex argument (log-magnitude + i*phase)."""
    return mult.eval_log(z)
