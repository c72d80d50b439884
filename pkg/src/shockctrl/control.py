"""Two-phase boundary null-control synthesis and the inviscid limit control.

Phase 1 on (0, tau) removes the ground-mode projection with an explicit
exponential control; phase 2 waits for the dissipation window (tau, tau+m*T^)
to shrink the state and then solves the moment problem on the remaining
window through the bi-orthogonal family (or the Gram oracle).  The assembled
control is h = h1 on (0,tau), 0 on the window, and
exp(-(t-tau)/(4 eps)) * h~(t-tau) afterwards.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .biorth import build_family, gram_moment_solve, rescale
from .errors import (CoefficientBoundViolation, CostBoundViolation,
                     HorizonTooShort, ModeTruncationInsufficient, StepTooCoarse)
from .multiplier import choose_multiplier
from .params import ProblemParams
from .spectral import EigenMode, eval_eigenfunction, norm_ratio_bound, spectrum

__all__ = [
    "ControlSignal", "ModeState", "project_onto_modes", "mode_update",
    "phase1_control", "state_at_tau", "phase2_coefficients", "synthesize",
    "limit_control", "export_control_csv", "export_synthesis_report",
]

# synthesis-time multiplier margin: 0.85 (t_hat/t_star)^2 keeps the phase-2
# cost exponent negative with real margin; below the feasibility floor the
# Fourier bandwidth of the family construction explodes, so kappa is clamped
# up there and the exponential-decay margin is reported as void instead
_KAPPA_SAFETY = 0.85
_KAPPA_CAP = 6.0
_KAPPA_FLOOR = 1.45


@dataclass(frozen=True)
class ModeState:
    """Projections <u, psi_hat_k> for k = 0..K at a fixed time."""

    time: float
    projections: np.ndarray
    modes: tuple[EigenMode, ...]

    def __post_init__(self):
        if len(self.projections) != len(self.modes):
            raise ValueError("one projection per mode required")
        if not np.all(np.isfinite(self.projections)):
            raise ValueError("non-finite mode projection")


@dataclass
class ControlSignal:
    """Boundary control sampled on a uniform grid over [0, T]."""

    t: np.ndarray
    h: np.ndarray
    phase_boundaries: tuple[float, ...]
    l2_norm: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.l2_norm = float(np.sqrt(np.trapezoid(self.h ** 2, self.t)))

    def __call__(self, t):
        return np.interp(t, self.t, self.h, left=0.0, right=0.0)

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])


def project_onto_modes(x: np.ndarray, u: np.ndarray,
                       modes: list[EigenMode] | tuple[EigenMode, ...],
                       params: ProblemParams, time: float = 0.0) -> ModeState:
    """Trapezoid projections of a sampled state onto psi_hat_0..psi_hat_K."""
    proj = np.array([np.trapezoid(u * eval_eigenfunction(m, params, x), x)
                     for m in modes])
    return ModeState(time=time, projections=proj, modes=tuple(modes))


def mode_update(t1: float, t2: float, start: ModeState, signal: ControlSignal,
                k: int) -> float:
    """Duality update of the k-th projection between t1 < t2.

    <u(t2), psi_hat_k> = e^{-lam_k (t2-t1)} <u(t1), psi_hat_k>
                         + int_{t1}^{t2} e^{-lam_k (t-t1)} h(t1+t2-t) dt,
    the boundary factor being 1 by the eps*psi'(-L) normalization.
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    lam = start.modes[k].lam
    dt = signal.step
    if lam * dt > 0.5:
        raise StepTooCoarse("control grid cannot resolve this mode's decay",
                            k=k, step=dt, required=0.5 / lam)
    # substitute s = t1 + t2 - t: integral of e^{-lam (t2 - s)} h(s) over [t1, t2]
    n = max(int(math.ceil((t2 - t1) / dt)) * 2, 64)
    s = np.linspace(t1, t2, n + 1)
    integrand = np.exp(-lam * (t2 - s)) * signal(s)
    val = float(np.trapezoid(integrand, s))
    return math.exp(-lam * (t2 - t1)) * float(start.projections[k]) + val


def phase1_control(params: ProblemParams, u0_proj0: float,
                   mode0: EigenMode | None = None,
                   n_samples: int = 16384) -> ControlSignal:
    """h1(t) = -<u0, psi_hat_0> e^{-lam_0 t}/tau on (0, tau)."""
    tau = params.tau
    if mode0 is None:
        from .spectral import solve_lambda0
        mode0 = solve_lambda0(params)
    t = np.linspace(0.0, tau, n_samples + 1)
    h = -u0_proj0 * np.exp(-mode0.lam * t) / tau
    return ControlSignal(t=t, h=h, phase_boundaries=(tau,),
                         meta={"phase": 1, "lam0": mode0.lam})


def state_at_tau(params: ProblemParams, u0_projs: ModeState) -> ModeState:
    """Closed-form state after phase 1; the ground entry is exactly zero."""
    tau = params.tau
    modes = u0_projs.modes
    lam0 = modes[0].lam
    p0 = float(u0_projs.projections[0])
    out = np.zeros(len(modes))
    for i, m in enumerate(modes):
        if i == 0:
            continue
        dl = m.lam - lam0
        if dl <= 0:
            raise AssertionError("spectrum ordering lost: lam_k <= lam_0")
        kernel = (1.0 - math.exp(-dl * tau)) / dl
        out[i] = math.exp(-m.lam * tau) * float(u0_projs.projections[i]) \
            - math.exp(-lam0 * tau) * p0 / tau * kernel
    return ModeState(time=tau, projections=out, modes=modes)


def phase2_coefficients(params: ProblemParams, state_tau: ModeState, K: int,
                        u0_norm: float | None = None) -> np.ndarray:
    """c_k = e^{-mu_k (1+m) T^ /2} <u(tau), psi_hat_k> for k = 1..K.

    When the initial norm is supplied the combined analytic bound
    |c_k| <= (4L/(k pi sqrt(eps)) + 2 sqrt(2L)/(tau (lam_k - lam_0))) ||u0||
    is asserted; violation signals an eigenfunction normalization bug.
    """
    t_hat = params.t_hat
    modes = state_tau.modes
    c = np.zeros(K)
    for k in range(1, K + 1):
        m = modes[k]
        c[k - 1] = math.exp(-m.mu * (1.0 + params.m) * t_hat / 2.0) \
            * float(state_tau.projections[k])
        if u0_norm is not None:
            lam0 = modes[0].lam
            bound = (4.0 * params.L / (k * math.pi * math.sqrt(params.eps))
                     + 2.0 * math.sqrt(2.0 * params.L)
                     / (params.tau * (m.lam - lam0))) * u0_norm
            if abs(c[k - 1]) > bound * (1.0 + 1e-9):
                raise CoefficientBoundViolation(
                    "phase-2 coefficient exceeds its analytic bound",
                    k=k, value=c[k - 1], bound=bound)
    return c


def _control_grid(params: ProblemParams, lam_max: float) -> np.ndarray:
    T = params.horizon
    step = min(params.eps / 4.0, 0.25 / lam_max, params.t_tilde / 8192.0)
    n = int(math.ceil(T / step))
    return np.linspace(0.0, T, n + 1)


def synthesize(params: ProblemParams, x: np.ndarray, u0: np.ndarray,
               K: int = 16, solver: str = "biorth",
               tail_tol: float = 1e-8) -> ControlSignal:
    """Assemble the full two-phase null control for a sampled initial state.

    Mode coefficients beyond the numerically relevant range are dropped (their
    phase-2 weights decay like e^{-mu_k (1+m) T^ /2}); the first dropped mode's
    share of the moment energy is checked against tail_tol.
    """
    if solver not in ("biorth", "gram"):
        raise ValueError(f"unknown solver {solver!r}")
    T = params.horizon
    if T <= params.t_star:
        raise HorizonTooShort("synthesis needs T > 4*sqrt(3)*L",
                              T=T, t_star=params.t_star)
    tau, t_hat, t_tilde = params.tau, params.t_hat, params.t_tilde
    u0_norm = float(np.sqrt(np.trapezoid(u0 ** 2, x)))

    modes = spectrum(params, K + 1)
    state0 = project_onto_modes(x, u0, modes, params)
    sig1 = phase1_control(params, float(state0.projections[0]), modes[0])
    bound1 = 2.0 * math.sqrt(2.0 * params.L) / tau * u0_norm
    if sig1.l2_norm > bound1 * (1.0 + 1e-9):
        raise CostBoundViolation("phase-1 cost exceeds its bound",
                                 norm=sig1.l2_norm, bound=bound1)

    state_t = state_at_tau(params, state0)
    c_all = phase2_coefficients(params, state_t, K + 1, u0_norm=u0_norm)

    # effective truncation: modes whose weighted coefficient can matter
    scale = float(np.max(np.abs(c_all))) if np.any(c_all != 0.0) else 0.0
    keep = 0
    for k in range(1, K + 1):
        if scale > 0.0 and abs(c_all[k - 1]) > 1e-16 * scale:
            keep = k
    k_eff = max(keep, 1)
    if scale > 0.0 and abs(c_all[K]) > tail_tol * scale:
        raise ModeTruncationInsufficient(
            "requested truncation leaves relevant moment energy",
            K=K, next_coefficient=c_all[K], scale=scale)
    c = c_all[:k_eff]

    kappa = min(params.kappa_mult, _KAPPA_SAFETY * (t_hat / params.t_star) ** 2,
                _KAPPA_CAP)
    decay_margin_ok = True
    if kappa < _KAPPA_FLOOR:
        kappa = min(_KAPPA_FLOOR, params.kappa_mult)
        decay_margin_ok = kappa < (t_hat / params.t_star) ** 2
    if kappa <= 1.0:
        raise HorizonTooShort("horizon margin leaves no multiplier room",
                              T=T, kappa=kappa)
    spec_r = rescale(params, t_tilde, k_eff, modes=modes[:k_eff + 1])
    center = (1.0 + params.m) * t_hat / 2.0

    grid = _control_grid(params, modes[K + 1].lam)
    h = np.zeros_like(grid)
    mask1 = grid <= tau
    h[mask1] = sig1(grid[mask1])

    meta = {"eps": params.eps, "L": params.L, "T": T, "tau": tau,
            "m": params.m, "kappa": kappa, "K": K, "K_eff": k_eff,
            "solver": solver, "u0_norm": u0_norm,
            "decay_margin_ok": decay_margin_ok,
            "c": [float(v) for v in c]}

    mask2 = grid > tau + params.m * t_hat
    tc = grid[mask2] - tau - center          # centered moment-window time
    if solver == "biorth":
        mult = choose_multiplier(spec_r.S, kappa, eta_max=float(spec_r.eta[-1]))
        fam = build_family(spec_r, mult, K=k_eff, tol=_family_gate(c, u0_norm))
        h_tilde = np.zeros_like(tc)
        for k in range(1, k_eff + 1):
            h_tilde -= c[k - 1] * np.interp(tc, fam.t, fam.q[k - 1],
                                            left=0.0, right=0.0)
        resid = fam.residual_matrix[:, :k_eff] @ c
        meta["moment_residuals"] = [float(v) for v in resid]
        meta["moment_residual_max"] = float(np.max(np.abs(
            resid[fam.verified[:len(resid)]]))) if np.any(fam.verified) else math.inf
        meta["unverified_rows_bound"] = float(
            np.sum(np.abs(c)) * np.max(fam.row_noise[~fam.verified])) \
            if np.any(~fam.verified) else 0.0
        meta["family_max_residual"] = fam.max_verified_residual
    else:
        targets = np.concatenate(([0.0], -c))          # ground row included
        sol = gram_moment_solve(spec_r.mus, targets, t_tilde)
        h_tilde = sol(tc)
        gr = sol.moments() - targets
        meta["moment_residuals"] = [float(v) for v in gr]
        meta["moment_residual_max"] = float(np.max(np.abs(gr)))
        meta["gram_condition"] = sol.condition
    h[mask2] = np.exp(-(grid[mask2] - tau) / (4.0 * params.eps)) * h_tilde

    sig = ControlSignal(t=grid, h=h,
                        phase_boundaries=(tau, tau + params.m * t_hat, T),
                        meta=meta)
    _assert_cost_bound(params, sig, u0_norm)
    return sig


def _family_gate(c: np.ndarray, u0_norm: float) -> float:
    """Residual tolerance the family must meet so that the assembled control
    certifies moments to 1e-6 * ||u0||, clamped to [1e-6, 1e-3]."""
    total = float(np.sum(np.abs(c)))
    if total == 0.0 or u0_norm == 0.0:
        return 1e-6
    return min(1e-3, max(1e-6, 1e-6 * u0_norm / (3.0 * total)))


def _assert_cost_bound(params: ProblemParams, sig: ControlSignal,
                       u0_norm: float) -> None:
    base = 2.0 * math.sqrt(2.0 * params.L) / (params.horizon - params.t_star)
    slack = sig.l2_norm - base * u0_norm
    eps = params.eps
    if slack <= 0.0 or u0_norm == 0.0:
        sig.meta["cost_C_fit"] = 0.0
        sig.meta["bound_rhs"] = base * max(u0_norm, 1.0)
        return
    target = slack / u0_norm
    peak = eps / math.e
    if target > peak:
        raise CostBoundViolation("no constant C satisfies the two-phase bound",
                                 norm=sig.l2_norm, base=base * u0_norm)
    c_fit = brentq(lambda C: C * math.exp(-C / eps) - target, eps, 1e6 * eps)
    sig.meta["cost_C_fit"] = c_fit
    sig.meta["bound_rhs"] = (base + c_fit * math.exp(-c_fit / eps)) * u0_norm


def limit_control(params: ProblemParams, x: np.ndarray, u0: np.ndarray,
                  shape: str = "two-phase", n_samples: int = 8192) -> ControlSignal:
    """Vanishing-viscosity limit control.

    'two-phase': -2/(T - t_star) * int u0 on (0, (T - t_star)/2], then 0;
    'inviscid':  -1/(T - L) * int u0 on (0, T - L), then 0 (optimal for the
    transport limit system, requiring only T > L).
    """
    T = params.horizon
    mass = float(np.trapezoid(u0, x))
    t = np.linspace(0.0, T, n_samples + 1)
    h = np.zeros_like(t)
    if shape == "two-phase":
        if T <= params.t_star:
            raise HorizonTooShort("two-phase limit shape needs T > 4*sqrt(3)*L",
                                  T=T, t_star=params.t_star)
        t_on = 0.5 * (T - params.t_star)
        h[t <= t_on] = -2.0 * mass / (T - params.t_star)
        bnd = (t_on, T)
    elif shape == "inviscid":
        if T <= params.L:
            raise HorizonTooShort("inviscid control needs T > L", T=T, L=params.L)
        h[t < T - params.L] = -mass / (T - params.L)
        bnd = (T - params.L, T)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    sig = ControlSignal(t=t, h=h, phase_boundaries=bnd,
                        meta={"shape": shape, "mass": mass})
    # piecewise-constant shape: the exact norm, not the sampled trapezoid's
    sig.l2_norm = abs(h[0]) * math.sqrt(bnd[0])
    return sig


def export_control_csv(sig: ControlSignal, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "h"])
        for tt, hh in zip(sig.t, sig.h):
            w.writerow([f"{tt:.17g}", f"{hh:.17g}"])


def export_synthesis_report(sig: ControlSignal, path) -> None:
    keys = ("eps", "L", "T", "tau", "m", "kappa", "K", "l2_norm",
            "bound_rhs", "moment_residual_max")
    payload = {k: sig.meta.get(k) for k in keys}
    payload["l2_norm"] = sig.l2_norm
    payload.update({k: v for k, v in sig.meta.items() if k not in payload})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=float)
