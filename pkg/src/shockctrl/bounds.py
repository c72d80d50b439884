"""Lower-bound rate machinery and cost sweeps over (eps, T).

The complex-analytic argument yields a cost lower bound of the form
c * prefactor * exp(-lam_1 T + sqrt(2) L/eps - L/(2 eps)) with c unknown, so
only the rate and the blow-up predicate T < (4 sqrt(2) - 2) L are evaluated.
Sweeps combine measured synthesis costs (for T above the two-phase threshold)
with a finite-section worst-case proxy and the rate report, and flag the
bounded/growing trends that bracket the uniform-controllability window
[(4 sqrt 2 - 2) L, 4 sqrt 3 L].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .control import synthesize
from .errors import HorizonTooShort
from .params import ProblemParams
from .spectral import solve_lambda_k, spectrum

__all__ = [
    "LowerBoundReport", "lower_bound_rate", "empirical_cost",
    "CostSweep", "sweep", "export_sweep_csv",
]


@dataclass(frozen=True)
class LowerBoundReport:
    eps: float
    T: float
    exponent_rate: float       # -lam_1 T + sqrt(2) L/eps - L/(2 eps)
    prefactor_log: float       # log[(4L^2/(3 eps pi^2))(1 + 2L^2/(pi^2 eps^2))^2]
    blowup_flag: bool          # exactly T < (4 sqrt 2 - 2) L


def lower_bound_rate(params: ProblemParams) -> LowerBoundReport:
    """Rate-only lower-bound report; never claims an absolute cost value."""
    eps, L, T = params.eps, params.L, params.horizon
    lam1 = solve_lambda_k(params, 1).lam
    rate = -lam1 * T + math.sqrt(2.0) * L / eps - L / (2.0 * eps)
    pref = math.log(4.0 * L ** 2 / (3.0 * eps * math.pi ** 2)) \
        + 2.0 * math.log1p(2.0 * L ** 2 / (math.pi ** 2 * eps ** 2))
    return LowerBoundReport(
        eps=eps, T=T, exponent_rate=rate, prefactor_log=pref,
        blowup_flag=T < (4.0 * math.sqrt(2.0) - 2.0) * L)


def empirical_cost(params: ProblemParams, K: int) -> float:
    """Finite-section proxy for the worst-case null-control cost.

    Restricts initial data to the span of the first K+1 normalized adjoint
    eigenfunctions and measures the minimal-norm control (in the span of the
    mode exponentials on (0,T)) that zeroes every retained projection; the
    worst ratio over unit initial data is a lower estimate of the true cost.
    """
    T = params.horizon
    if T <= 0:
        raise HorizonTooShort("cost needs a positive horizon", T=T)
    modes = spectrum(params, max(K, 1))[:K + 1]
    lams = np.array([m.lam for m in modes])
    n = K + 1
    # control Gram over e_k(t) = exp(-lam_k (T - t))
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            s = lams[i] + lams[j]
            G[i, j] = (1.0 - math.exp(-s * T)) / s if s * T > 1e-12 else T
    # eigenfunction Gram (the psi_hat are not orthogonal)
    from .spectral import eval_eigenfunction
    xs = np.linspace(-params.L, params.L, 4097)
    psi = np.stack([eval_eigenfunction(mm, params, xs) for mm in modes])
    W = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            W[i, j] = W[j, i] = np.trapezoid(psi[i] * psi[j], xs)
    E = np.diag(np.exp(-np.minimum(lams * T, 700.0)))
    # worst-case of (E W b)^T G^{-1} (E W b) over b^T W b = 1
    M = W @ E @ np.linalg.solve(G, E @ W)
    vals = eigh(M, W, eigvals_only=True)
    return float(math.sqrt(max(vals[-1], 0.0)))


@dataclass
class CostSweep:
    cells: list[dict] = field(default_factory=list)
    flags: dict = field(default_factory=dict)


def sweep(eps_grid, T_grid, K: int, L: float = 1.0, m: float = 0.5,
          kappa_mult: float = 6.0, x=None, u0=None) -> CostSweep:
    """Rectangular (eps, T) sweep of measured costs, bound values and rates.

    For T above the two-phase threshold the measured cost comes from an
    actual synthesized control (default initial state: unit-norm compact
    bump); below it the finite-section proxy stands in.  Trend flags mark
    boundedness (cost variation under 2x across eps) for T > 4 sqrt(3) L and
    growth (positive, eps-increasing rate) for T < (4 sqrt 2 - 2) L.
    """
    if x is None:
        x = np.linspace(-L, L, 4097)
        u0 = np.exp(-1.0 / np.maximum(1.0 - (x / L) ** 2, 1e-300))
        u0[0] = u0[-1] = 0.0
        u0 = u0 / np.sqrt(np.trapezoid(u0 ** 2, x))
    t_star = 4.0 * math.sqrt(3.0) * L
    out = CostSweep()
    for T in T_grid:
        for eps in eps_grid:
            p = ProblemParams(eps=eps, L=L, T=T, m=m, kappa_mult=kappa_mult)
            rep = lower_bound_rate(p)
            cell = {"eps": eps, "T": T, "exponent_rate": rep.exponent_rate,
                    "blowup_flag": rep.blowup_flag}
            if T > t_star:
                sig = synthesize(p, x, u0, K=K)
                cell["measured_cost"] = sig.l2_norm
                cell["bound_rhs"] = sig.meta["bound_rhs"]
            else:
                cell["measured_cost"] = empirical_cost(p, min(K, 6))
                cell["bound_rhs"] = float("nan")
            out.cells.append(cell)
    for T in T_grid:
        cells = [c for c in out.cells if c["T"] == T]
        cells.sort(key=lambda c: -c["eps"])          # decreasing eps
        costs = [c["measured_cost"] for c in cells]
        rates = [c["exponent_rate"] for c in cells]
        flags = {}
        if T > t_star:
            flags["bounded_in_eps"] = max(costs) / max(min(costs), 1e-300) < 2.0
        if T < (4.0 * math.sqrt(2.0) - 2.0) * L:
            flags["growing_in_eps"] = all(c["blowup_flag"] for c in cells) and \
                all(b > a for a, b in zip(rates, rates[1:]))
        out.flags[T] = flags
    return out


def export_sweep_csv(sw: CostSweep, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "T", "measured_cost", "bound_rhs",
                    "exponent_rate", "blowup_flag"])
        for c in sw.cells:
            w.writerow([f"{c['eps']:.17g}", f"{c['T']:.17g}",
                        f"{c['measured_cost']:.17g}", f"{c['bound_rhs']:.17g}",
                        f"{c['exponent_rate']:.17g}", str(c["blowup_flag"]).lower()])
