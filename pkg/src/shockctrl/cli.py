"""Command-line front end.

Subcommands: spectrum, biorth, synthesize, simulate, limit, sweep, lower-bound.
Every invocation writes its delimited artifacts plus a JSON manifest echoing
each effective parameter (defaults included), so runs are reproducible
byte-for-byte; there is no randomness anywhere in the pipeline.  Report paths
render matplotlib figures next to the delimited output unless --no-figures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import plots
from .biorth import (build_family, export_family_csv, export_residual_json,
                     rescale)
from .bounds import export_sweep_csv, lower_bound_rate, sweep
from .control import (export_control_csv, export_synthesis_report,
                      limit_control, synthesize)
from .errors import ShockCtrlError
from .multiplier import choose_multiplier
from .params import ProblemParams
from .pde import (export_run_manifest, export_snapshot_csv, limit_solve,
                  make_grid, simulate)
from .spectral import export_spectrum_csv, spectrum

_U0_CHOICES = "built-ins 'sin', 'bump', or 'file:<csv path>' (columns x,u)"


def _build_u0(name: str, L: float, n: int = 4097):
    """Unit-L2-normalized initial state sampled on a uniform grid."""
    if name.startswith("file:"):
        data = np.loadtxt(name[5:], delimiter=",", skiprows=1)
        x, u = data[:, 0], data[:, 1]
    else:
        x = np.linspace(-L, L, n)
        if name == "sin":
            u = np.sin(np.pi * x / L)
        elif name == "bump":
            u = np.exp(-1.0 / np.maximum(1.0 - (x / L) ** 2, 1e-300))
        else:
            raise ValueError(f"unknown u0 {name!r}; use {_U0_CHOICES}")
    u = np.array(u, dtype=float)
    u[0] = u[-1] = 0.0
    nrm = float(np.sqrt(np.trapezoid(u ** 2, x)))
    if nrm == 0.0:
        raise ValueError("u0 has zero norm")
    return x, u / nrm


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _write_manifest(out: str, command: str, effective: dict) -> None:
    path = Path(out).with_suffix(Path(out).suffix + ".manifest.json")
    payload = {"command": command, "deterministic": True}
    payload.update({k: v for k, v in sorted(effective.items())})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=str)


def _add_common(p: argparse.ArgumentParser, with_T=True) -> None:
    p.add_argument("--eps", type=float, required=True, help="viscosity")
    p.add_argument("--L", type=float, default=1.0, help="half-length")
    if with_T:
        p.add_argument("--T", type=float, help="control horizon")
    p.add_argument("--m", type=float, default=0.5, help="dissipation fraction")
    p.add_argument("--kappa", type=float, default=6.0,
                   help="multiplier margin (> 1)")
    p.add_argument("--out", required=True, help="output path (CSV)")
    fig = p.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true")
    fig.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(figures=None)


def _figure_path(out: str, suffix: str = "") -> str:
    base = Path(out)
    return str(base.with_name(base.stem + suffix + ".png"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shockctrl",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues and eigenfunction norms")
    _add_common(p, with_T=False)
    p.add_argument("--K", type=int, default=8)

    p = sub.add_parser("biorth", help="bi-orthogonal family construction")
    _add_common(p, with_T=False)
    p.add_argument("--K", type=int, default=6)
    p.add_argument("--T-tilde", type=float, required=True,
                   help="centered moment interval length")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("synthesize", help="two-phase null control")
    _add_common(p)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--u0", default="sin", help=_U0_CHOICES)
    p.add_argument("--solver", choices=("biorth", "gram"), default="biorth")

    p = sub.add_parser("simulate", help="certify a control by simulation")
    _add_common(p)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--u0", default="sin", help=_U0_CHOICES)
    p.add_argument("--solver", choices=("biorth", "gram"), default="biorth")
    p.add_argument("--n", type=int, default=2048, help="grid nodes")
    p.add_argument("--dt", type=float, help="time step (default: guard value)")
    p.add_argument("--snapshots", type=int, default=8,
                   help="number of recorded snapshots")

    p = sub.add_parser("limit", help="inviscid limit system at time T")
    _add_common(p)
    p.add_argument("--u0", default="sin", help=_U0_CHOICES)
    p.add_argument("--shape", choices=("two-phase", "inviscid"),
                   default="inviscid")

    p = sub.add_parser("sweep", help="(eps, T) cost sweep")
    p.add_argument("--eps", type=str, required=True, help="comma list")
    p.add_argument("--T", type=str, required=True, help="comma list")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--kappa", type=float, default=6.0)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--u0", default="bump", help=_U0_CHOICES)
    p.add_argument("--out", required=True)
    fig = p.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true")
    fig.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(figures=None)

    p = sub.add_parser("lower-bound", help="rate-only lower-bound report")
    _add_common(p)
    return ap


def _cmd_spectrum(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, m=args.m,
                           kappa_mult=args.kappa)
    modes = spectrum(params, args.K)
    export_spectrum_csv(modes, params, args.out)
    if args.figures:
        plots.spectrum_figure(modes, params, _figure_path(args.out))
    return {"eps": args.eps, "L": args.L, "K": args.K, "rows": args.K + 1}


def _cmd_biorth(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, m=args.m,
                           kappa_mult=args.kappa)
    spec = rescale(params, args.T_tilde, args.K)
    mult = choose_multiplier(spec.S, args.kappa, eta_max=float(spec.eta[-1]))
    fam = build_family(spec, mult, K=args.K, tol=args.tol)
    stem = Path(args.out)
    pattern = str(stem.with_name(stem.stem + "_k{k}" + stem.suffix))
    export_family_csv(fam, pattern)
    export_residual_json(fam, str(stem.with_suffix(".residuals.json")))
    if args.figures:
        plots.family_figure(fam, _figure_path(args.out))
    return {"eps": args.eps, "L": args.L, "K": args.K, "T_tilde": args.T_tilde,
            "S": spec.S, "beta": mult.beta, "delta": mult.delta,
            "nu": mult.nu, "kappa": args.kappa, "tol": args.tol,
            "max_residual": fam.max_verified_residual}


def _cmd_synthesize(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, T=args.T, m=args.m,
                           kappa_mult=args.kappa)
    x, u0 = _build_u0(args.u0, args.L)
    sig = synthesize(params, x, u0, K=args.K, solver=args.solver)
    export_control_csv(sig, args.out)
    export_synthesis_report(sig, str(Path(args.out).with_suffix(".report.json")))
    if args.figures:
        plots.control_figure(sig, _figure_path(args.out))
    return {"eps": args.eps, "L": args.L, "T": args.T, "tau": params.tau,
            "m": args.m, "kappa": sig.meta["kappa"], "K": args.K,
            "K_eff": sig.meta["K_eff"], "u0": args.u0, "solver": args.solver,
            "l2_norm": sig.l2_norm}


def _cmd_simulate(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, T=args.T, m=args.m,
                           kappa_mult=args.kappa)
    x, u0 = _build_u0(args.u0, args.L)
    sig = synthesize(params, x, u0, K=args.K, solver=args.solver)
    grid = make_grid(params, args.n)
    un = np.interp(grid.nodes, x, u0)
    modes = spectrum(params, 4)
    dt = args.dt or min(params.eps, 1.0 / modes[-1].lam) / 4.0
    snaps = np.linspace(0.0, args.T, args.snapshots + 1)[1:]
    res = simulate(params, un, sig, grid, dt, snapshot_times=snaps,
                   project_modes=modes)
    export_snapshot_csv(res.x, res.final_state, args.out)
    export_run_manifest(res, str(Path(args.out).with_suffix(".run.json")))
    if args.figures is not False:
        plots.simulation_figure(res, _figure_path(args.out))
        plots.control_figure(sig, _figure_path(args.out, "_control"))
    return {"eps": args.eps, "L": args.L, "T": args.T, "n": args.n, "dt": dt,
            "K": args.K, "u0": args.u0, "solver": args.solver,
            "final_l2": res.final_l2, "cost_measured": sig.l2_norm,
            "snapshots": args.snapshots}


def _cmd_limit(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, T=args.T, m=args.m,
                           kappa_mult=args.kappa)
    x, u0 = _build_u0(args.u0, args.L)
    sig = limit_control(params, x, u0, shape=args.shape)
    state = limit_solve(params, x, u0, sig)
    export_snapshot_csv(state.x, state.u, args.out)
    with open(Path(args.out).with_suffix(".limit.json"), "w") as fh:
        json.dump({"dirac_mass": state.dirac_mass, "time": state.time,
                   "control_l2": sig.l2_norm}, fh, indent=1)
    if args.figures:
        plots.control_figure(sig, _figure_path(args.out, "_control"))
    return {"eps": args.eps, "L": args.L, "T": args.T, "u0": args.u0,
            "shape": args.shape, "dirac_mass": state.dirac_mass,
            "control_l2": sig.l2_norm}


def _cmd_sweep(args) -> dict:
    eps_grid = _float_list(str(args.eps))
    T_grid = _float_list(str(args.T)) if args.T is not None else []
    if not T_grid:
        raise ValueError("sweep needs --T as a comma list")
    x, u0 = _build_u0(args.u0, args.L)
    sw = sweep(eps_grid, T_grid, args.K, L=args.L, m=args.m,
               kappa_mult=args.kappa, x=x, u0=u0)
    export_sweep_csv(sw, args.out)
    if args.figures is not False:
        plots.sweep_figure(sw, _figure_path(args.out))
    return {"eps_grid": eps_grid, "T_grid": T_grid, "K": args.K,
            "L": args.L, "u0": args.u0, "cells": len(sw.cells),
            "flags": {str(k): v for k, v in sw.flags.items()}}


def _cmd_lower_bound(args) -> dict:
    params = ProblemParams(eps=args.eps, L=args.L, T=args.T, m=args.m,
                           kappa_mult=args.kappa)
    rep = lower_bound_rate(params)
    with open(args.out, "w") as fh:
        fh.write("eps,T,exponent_rate,prefactor_log,blowup_flag\n")
        fh.write(f"{rep.eps:.17g},{rep.T:.17g},{rep.exponent_rate:.17g},"
                 f"{rep.prefactor_log:.17g},{str(rep.blowup_flag).lower()}\n")
    return {"eps": args.eps, "L": args.L, "T": args.T,
            "exponent_rate": rep.exponent_rate, "blowup_flag": rep.blowup_flag}


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "biorth": _cmd_biorth,
    "synthesize": _cmd_synthesize,
    "simulate": _cmd_simulate,
    "limit": _cmd_limit,
    "sweep": _cmd_sweep,
    "lower-bound": _cmd_lower_bound,
}


def parse_and_dispatch(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        effective = _DISPATCH[args.command](args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ShockCtrlError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 1
    effective.setdefault("m", getattr(args, "m", 0.5))
    effective.setdefault("kappa", getattr(args, "kappa", None))
    effective.setdefault("figures", bool(getattr(args, "figures", False)))
    effective.setdefault("out", args.out)
    _write_manifest(args.out, args.command, effective)
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
