"""Figure rendering for the report paths (spectra, controls, runs, sweeps).

Figures are written next to the delimited outputs; matplotlib runs on the Agg
backend so the CLI works headless.
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

golden = (math.sqrt(5.0) - 1.0) / 2.0
fig_width = 6.4
plt.rcParams.update({
    "figure.figsize": (fig_width, fig_width * golden),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
})


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def spectrum_figure(modes, params, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(2 * fig_width, fig_width * golden))
    ks = [m.k for m in modes]
    lams = [m.lam for m in modes]
    ax1.semilogy(ks, lams, "o-", ms=4)
    ax1.axhline(0.25 / params.eps, color="k", lw=0.8, ls="--",
                label=r"$1/(4\varepsilon)$")
    ax1.set_xlabel("k")
    ax1.set_ylabel(r"$\lambda_k$")
    ax1.legend()
    from .spectral import eval_eigenfunction
    x = np.linspace(-params.L, params.L, 1201)
    for m in modes[:4]:
        ax2.plot(x, eval_eigenfunction(m, params, x), lw=1.0,
                 label=f"k={m.k}")
    ax2.set_xlabel("x")
    ax2.set_ylabel(r"$\hat\psi_k$")
    ax2.legend()
    fig.suptitle(f"spectrum, eps={params.eps}, L={params.L}")
    return _save(fig, path)


def family_figure(fam, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(2 * fig_width, fig_width * golden))
    for k in range(1, min(fam.K, 4) + 1):
        ax1.plot(fam.t, fam.q[k - 1], lw=0.8, label=f"k={k}")
    ax1.set_xlabel("t")
    ax1.set_ylabel(r"$q_k(t)$")
    ax1.legend()
    res = np.abs(fam.residual_matrix)
    im = ax2.imshow(np.log10(np.maximum(res, 1e-18)), aspect="auto",
                    origin="lower", cmap="viridis")
    ax2.set_xlabel("k - 1")
    ax2.set_ylabel("j")
    fig.colorbar(im, ax=ax2, label=r"$\log_{10}$ |residual|")
    fig.suptitle("bi-orthogonal family and moment residuals")
    return _save(fig, path)


def control_figure(sig, path):
    fig, ax = plt.subplots()
    ax.plot(sig.t, sig.h, lw=0.9)
    for b in sig.phase_boundaries[:-1]:
        ax.axvline(b, color="k", lw=0.7, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("h(t)")
    ax.set_title(f"boundary control, ||h|| = {sig.l2_norm:.4g}")
    return _save(fig, path)


def simulation_figure(res, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(2 * fig_width, fig_width * golden))
    ax1.plot(res.x, res.final_state, lw=0.9)
    ax1.set_xlabel("x")
    ax1.set_ylabel("u(T, x)")
    ax1.set_title(f"final state, ||u(T)|| = {res.final_l2:.3e}")
    if len(res.times):
        ax2.semilogy(res.times, np.maximum(res.norm_history, 1e-18), "o-", ms=3)
        ax2.set_xlabel("t")
        ax2.set_ylabel("||u(t)||")
    return _save(fig, path)


def sweep_figure(sw, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(2 * fig_width, fig_width * golden))
    ts = sorted(set(c["T"] for c in sw.cells))
    for T in ts:
        cells = sorted((c for c in sw.cells if c["T"] == T),
                       key=lambda c: c["eps"])
        eps = [c["eps"] for c in cells]
        ax1.loglog(eps, [c["measured_cost"] for c in cells], "o-",
                   label=f"T={T:.3g}")
        ax2.semilogx(eps, [c["exponent_rate"] for c in cells], "o-",
                     label=f"T={T:.3g}")
    ax1.set_xlabel(r"$\varepsilon$")
    ax1.set_ylabel("measured cost")
    ax1.legend()
    ax2.set_xlabel(r"$\varepsilon$")
    ax2.set_ylabel("lower-bound exponent rate")
    ax2.legend()
    fig.suptitle("cost sweep")
    return _save(fig, path)
