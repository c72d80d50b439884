"""Viscous simulation of the controlled system and the inviscid limit solver.

The viscous solver advances  u_t + (U u)_x = eps u_xx  with U = -tanh(x/2 eps),
Dirichlet data h(t) at -L and 0 at +L, by a theta scheme (Crank-Nicolson with
two implicit startup steps) on a grid graded into the shock layer and the
boundaries.  Advection is in conservative flux form with centered interface
values and an upwind blend that activates only where the cell Peclet number
exceeds 2.

The inviscid solver is exact: characteristics transport the initial state
toward x = 0 where a point mass accumulates; its mass obeys
m(t) = int_{-t}^{t} u0 for t < L and int u0 + int_0^{t-L} h afterwards.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .control import ControlSignal, ModeState, project_onto_modes
from .errors import GridTooCoarse, StepTooCoarse
from .params import ProblemParams
from .spectral import EigenMode, eval_eigenfunction

__all__ = [
    "Grid", "make_grid", "shock_profile", "simulate", "SimulationResult",
    "limit_solve", "InviscidState", "viscous_vs_limit",
    "export_snapshot_csv", "export_run_manifest",
]


def shock_profile(params: ProblemParams, x):
    """Stationary profile U(x) = -tanh(x/(2 eps))."""
    return -np.tanh(np.asarray(x, dtype=float) / (2.0 * params.eps))


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray

    def __post_init__(self):
        d = np.diff(self.nodes)
        if np.any(d <= 0):
            raise GridTooCoarse("nodes must increase strictly")

    @property
    def n(self) -> int:
        return len(self.nodes)


def make_grid(params: ProblemParams, n: int, graded: bool = True) -> Grid:
    """Node set on [-L, L] with at least 8 nodes inside |x| <= 2 eps.

    Graded grids place Gaussian-bump node density at the shock and both
    boundaries, with the amplitude backed off until adjacent spacing ratios
    stay below 1.1; uniform is the fallback.
    """
    L, eps = params.L, params.eps
    if not graded:
        nodes = np.linspace(-L, L, n)
        grid = Grid(nodes=nodes)
        _check_layer(grid, eps)
        return grid

    # mirror-symmetric construction: density bumps at the shock and at the
    # boundary, nodes on [0, L] from the inverse CDF, reflected about 0
    n_half = (n + 1) // 2
    ref = np.linspace(0.0, L, 40 * n_half)
    w0 = max(4.0 * eps, 8.0 * L / n)
    wb = max(2.0 * eps, 6.0 * L / n)
    amp = 4.0
    nodes = None
    for _ in range(14):
        rho = 1.0 + amp * (np.exp(-(ref / w0) ** 2)
                           + np.exp(-((ref - L) / wb) ** 2))
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1])
                                               * np.diff(ref))))
        cdf /= cdf[-1]
        half = np.interp(np.linspace(0.0, 1.0, n_half), cdf, ref)
        half[0], half[-1] = 0.0, L
        nodes = np.concatenate((-half[:0:-1], half))
        d = np.diff(nodes)
        if np.all(d > 0) and np.max(d[1:] / d[:-1]) <= 1.1 \
                and np.max(d[:-1] / d[1:]) <= 1.1:
            break
        amp *= 0.7
    grid = Grid(nodes=nodes)
    _check_layer(grid, eps)
    return grid


def _check_layer(grid: Grid, eps: float) -> None:
    inside = np.sum(np.abs(grid.nodes) <= 2.0 * eps)
    if inside < 8:
        raise GridTooCoarse("fewer than 8 nodes inside the shock layer",
                            inside=int(inside))


@dataclass
class SimulationResult:
    x: np.ndarray
    final_state: np.ndarray
    times: np.ndarray
    mode_history: np.ndarray          # (n_snapshots, K+1)
    norm_history: np.ndarray
    final_l2: float
    cost_measured: float
    meta: dict = field(default_factory=dict)

    def mode_state(self, i: int, modes: tuple[EigenMode, ...]) -> ModeState:
        return ModeState(time=float(self.times[i]),
                         projections=self.mode_history[i], modes=modes)


def _advection_diffusion_bands(params: ProblemParams, grid: Grid):
    """Tridiagonal bands of A with du/dt = A u (interior rows only)."""
    x = grid.nodes
    n = len(x)
    eps = params.eps
    hsp = np.diff(x)                       # h_i = x_{i+1} - x_i
    xf = 0.5 * (x[:-1] + x[1:])            # faces i+1/2
    uf = -np.tanh(xf / (2.0 * eps))
    pe = np.abs(uf) * hsp / eps
    w_up = np.where(pe > 2.0, 1.0 - 2.0 / np.maximum(pe, 2.0), 0.0)

    lo = np.zeros(n)
    di = np.zeros(n)
    up = np.zeros(n)
    dv = 0.5 * (x[2:] - x[:-2])
    for i in range(1, n - 1):
        vol = dv[i - 1]
        # face i+1/2: F = uf*(centered + upwind blend)
        wr = w_up[i]
        cl = uf[i] * (0.5 * (1 - wr) + wr * (1.0 if uf[i] > 0 else 0.0))
        cr = uf[i] * (0.5 * (1 - wr) + wr * (0.0 if uf[i] > 0 else 1.0))
        di[i] -= cl / vol
        up[i] -= cr / vol
        # face i-1/2
        wl = w_up[i - 1]
        cl = uf[i - 1] * (0.5 * (1 - wl) + wl * (1.0 if uf[i - 1] > 0 else 0.0))
        cr = uf[i - 1] * (0.5 * (1 - wl) + wl * (0.0 if uf[i - 1] > 0 else 1.0))
        lo[i] += cl / vol
        di[i] += cr / vol
        # diffusion fluxes eps (u_{i+1}-u_i)/h_i - eps (u_i - u_{i-1})/h_{i-1}
        up[i] += eps / (hsp[i] * vol)
        di[i] -= eps / (hsp[i] * vol) + eps / (hsp[i - 1] * vol)
        lo[i] += eps / (hsp[i - 1] * vol)
    return lo, di, up


def simulate(params: ProblemParams, u0: np.ndarray, h: ControlSignal | None,
             grid: Grid, dt: float, snapshot_times=None,
             project_modes: list[EigenMode] | None = None,
             forcing=None) -> SimulationResult:
    """Advance the controlled system to T and record mode projections.

    u0 is sampled on grid.nodes (clamped to 0 at the endpoints); h supplies the
    left Dirichlet value (None means no control).  forcing(x, t) adds a source
    term (used by the manufactured-solution order tests).
    """
    T = params.horizon
    lam_max = max((m.lam for m in project_modes), default=0.0) \
        if project_modes else 0.0
    dt_cap = min(params.eps, 1.0 / lam_max if lam_max > 0 else math.inf) / 4.0
    if dt > dt_cap * (1.0 + 1e-12):
        raise StepTooCoarse("time step above min(eps, 1/lam_K)/4",
                            dt=dt, required=dt_cap)
    _check_layer(grid, params.eps)

    x = grid.nodes
    n = len(x)
    lo, di, up = _advection_diffusion_bands(params, grid)
    u = np.array(u0, dtype=float)
    u[0] = 0.0
    u[-1] = 0.0

    psi_mat = None
    if project_modes:
        psi_mat = np.stack([eval_eigenfunction(m, params, x)
                            for m in project_modes])

    snap = sorted(set(float(s) for s in
                      (snapshot_times if snapshot_times is not None else [])))
    nsteps = int(round(T / dt))
    dt = T / nsteps
    snap_steps = sorted(set(min(nsteps, max(1, int(round(s / dt)))) for s in snap))

    def record(time, state, out_t, out_m, out_n):
        out_t.append(time)
        out_n.append(float(np.sqrt(np.trapezoid(state ** 2, x))))
        if psi_mat is not None:
            out_m.append(np.trapezoid(state[None, :] * psi_mat, x, axis=1))

    times_rec: list[float] = []
    modes_rec: list[np.ndarray] = []
    norms_rec: list[float] = []

    def theta_step(u, t_old, t_new, theta):
        rhs = u.copy()
        rhs[1:-1] = u[1:-1] + (1.0 - theta) * dt * (
            lo[1:-1] * u[:-2] + di[1:-1] * u[1:-1] + up[1:-1] * u[2:])
        if forcing is not None:
            f_mid = (1.0 - theta) * forcing(x[1:-1], t_old) \
                + theta * forcing(x[1:-1], t_new)
            rhs[1:-1] += dt * f_mid
        ab = np.zeros((3, n))
        ab[0, 2:] = -theta * dt * up[1:-1]
        ab[1, 1:-1] = 1.0 - theta * dt * di[1:-1]
        ab[2, :-2] = -theta * dt * lo[1:-1]
        ab[1, 0] = 1.0
        ab[1, -1] = 1.0
        rhs[0] = h(t_new) if h is not None else 0.0
        rhs[-1] = 0.0
        return solve_banded((1, 1), ab, rhs)

    t = 0.0
    for step_i in range(1, nsteps + 1):
        theta = 1.0 if step_i <= 2 else 0.5          # Rannacher startup
        u = theta_step(u, t, t + dt, theta)
        t += dt
        if step_i in snap_steps or step_i == nsteps:
            record(t, u, times_rec, modes_rec, norms_rec)

    cost = h.l2_norm if h is not None else 0.0
    return SimulationResult(
        x=x, final_state=u, times=np.array(times_rec),
        mode_history=np.array(modes_rec) if modes_rec else np.zeros((0, 0)),
        norm_history=np.array(norms_rec),
        final_l2=float(np.sqrt(np.trapezoid(u ** 2, x))),
        cost_measured=cost,
        meta={"eps": params.eps, "L": params.L, "T": T, "n": n, "dt": dt})


# --------------------------------------------------------------------------
# inviscid limit by characteristics
# --------------------------------------------------------------------------

def _signal_value(sig: ControlSignal | None, s):
    """Control value at time(s) s; shape-tagged limit signals are exact."""
    sa = np.asarray(s, dtype=float)
    if sig is None:
        return np.zeros_like(sa)
    if sig.meta.get("shape") in ("two-phase", "inviscid"):
        # piecewise-constant: first sample carries the plateau level
        t_on = sig.phase_boundaries[0]
        amp = sig.h[0] if len(sig.h) else 0.0
        return np.where((sa >= 0.0) & (sa < t_on), amp, 0.0)
    return np.interp(sa, sig.t, sig.h, left=0.0, right=0.0)


def _signal_integral(sig: ControlSignal | None, t_end: float) -> float:
    """int_0^{t_end} h; exact for shape-tagged signals."""
    if sig is None or t_end <= 0.0:
        return 0.0
    shape = sig.meta.get("shape")
    if shape in ("two-phase", "inviscid"):
        t_on = sig.phase_boundaries[0]
        amp = sig.h[0] if len(sig.h) else 0.0
        return amp * min(t_end, t_on)
    mask = sig.t <= t_end
    tt = np.concatenate((sig.t[mask], [t_end]))
    hh = np.concatenate((sig.h[mask], [sig(t_end)]))
    return float(np.trapezoid(hh, tt))


@dataclass
class InviscidState:
    x: np.ndarray
    u: np.ndarray
    dirac_mass: float
    time: float

    def total_mass(self) -> float:
        return float(np.trapezoid(self.u, self.x)) + self.dirac_mass


def limit_solve(params: ProblemParams, x: np.ndarray, u0: np.ndarray,
                h: ControlSignal | None, t: float | None = None,
                n_out: int = 2001) -> InviscidState:
    """Exact characteristics solution of the transport limit at time t.

    Left of the shock u(t,x) = u0(x-t) until the boundary characteristic
    arrives, then h(t-x-L); right of it u(t,x) = u0(x+t) until extinction.
    The point mass at 0 collects everything that crossed.
    """
    L = params.L
    tt = params.horizon if t is None else float(t)
    u0_of = lambda xx: np.interp(xx, x, u0, left=0.0, right=0.0)
    xs = np.linspace(-L, L, n_out)
    out = np.zeros_like(xs)
    left = xs < 0.0
    right = xs > 0.0
    xl = xs[left]
    from_data = tt < xl + L
    out[left] = np.where(from_data, u0_of(xl - tt),
                         _signal_value(h, tt - xl - L))
    xr = xs[right]
    out[right] = np.where(tt < L - xr, u0_of(xr + tt), 0.0)

    if tt < L:
        fine = np.linspace(-tt, tt, 4001)
        mass = float(np.trapezoid(u0_of(fine), fine))
    else:
        mass = float(np.trapezoid(u0, x)) + _signal_integral(h, tt - L)
    return InviscidState(x=xs, u=out, dirac_mass=mass, time=tt)


def viscous_vs_limit(eps_grid, base: ProblemParams, x: np.ndarray,
                     u0: np.ndarray, K: int = 8, n: int = 2048,
                     solver: str = "biorth") -> dict:
    """Sweep eps: control distance to the limit control and certified finals."""
    from .control import limit_control, synthesize

    rows = []
    h0 = limit_control(base, x, u0, shape="two-phase")
    for eps in eps_grid:
        p = ProblemParams(eps=eps, L=base.L, T=base.T, m=base.m,
                          kappa_mult=base.kappa_mult)
        sig = synthesize(p, x, u0, K=K, solver=solver)
        tt = np.linspace(0.0, base.horizon, 20001)
        dist = float(np.sqrt(np.trapezoid((sig(tt) - h0(tt)) ** 2, tt)))
        grid = make_grid(p, n)
        un = np.interp(grid.nodes, x, u0)
        dt = min(p.eps / 4.0, base.horizon / 2000.0)
        res = simulate(p, un, sig, grid, dt)
        rows.append({"eps": eps, "control_distance": dist,
                     "final_l2": res.final_l2, "cost": sig.l2_norm})
    dists = [r["control_distance"] for r in rows]
    return {"rows": rows,
            "distance_decreasing": all(b < a for a, b in zip(dists, dists[1:])),
            "limit_cost": h0.l2_norm}


def export_snapshot_csv(x: np.ndarray, u: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for xx, uu in zip(x, u):
            w.writerow([f"{xx:.17g}", f"{uu:.17g}"])


def export_run_manifest(res: SimulationResult, path) -> None:
    payload = {"eps": res.meta["eps"], "L": res.meta["L"], "T": res.meta["T"],
               "n": res.meta["n"], "dt": res.meta["dt"],
               "final_l2": res.final_l2, "cost_measured": res.cost_measured}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
