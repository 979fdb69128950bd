"""Study harness: reproducible report files with figures.

Runs a compact battery over the whole library (energy convergence,
gradient checks, symbol table, diagnostics, a short preconditioned flow)
and writes CSV tables plus matplotlib figures side by side in one output
directory.  All randomness flows from the single seed, and files are
written with fixed float formatting and fixed figure metadata, so a
repeated run with the same seed is bit-identical.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .curves import ClosedCurve, length, make_primitive, resample_arclength
from .diagnostics import beta_number, bilipschitz_constant, sobolev_seminorm
from .energy import EnergyParams, QuadratureSpec, tp_energy
from .flow import FlowConfig, run_flow, TRACE_COLUMNS
from .multiplier import build_multiplier_table, el_multiplier
from .variation import first_variation_general

__all__ = ["write_csv", "format_float", "run_study", "save_figure"]

_FIG_METADATA = {"Software": "tpknot study"}


def format_float(x) -> str:
    return "%.17g" % float(x)


def write_csv(path, columns, rows) -> None:
    """CSV with header, '.'-decimal, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (int, float, np.floating))
                             and not isinstance(v, bool) else str(v) for v in row])


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=110, metadata=_FIG_METADATA)
    plt.close(fig)


def _unit_circle(n: int) -> ClosedCurve:
    return make_primitive("circle", n, dim=2, radius=1.0 / (2 * np.pi))


def _study_energy(out_dir: str) -> None:
    params = EnergyParams(4.0, 2.0)
    target = np.pi**2
    rows = []
    ns, errs = [], []
    for n in (64, 128, 256, 512):
        e = tp_energy(_unit_circle(n), params)
        rows.append((n, e, abs(e - target) / target))
        ns.append(n)
        errs.append(abs(e - target) / target)
    write_csv(os.path.join(out_dir, "energy_convergence.csv"),
              ("n", "energy", "rel_error"), rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(ns, errs, "o-")
    ax.set_xlabel("n")
    ax.set_ylabel("relative error vs closed form")
    ax.set_title("circle energy convergence, p=4, q=2")
    fig.tight_layout()
    save_figure(fig, os.path.join(out_dir, "energy_convergence.png"))


def _study_gradient(out_dir: str, seed: int) -> None:
    rng = np.random.default_rng(seed)
    n = 128
    params = EnergyParams(4.5, 2.0)
    curve = _unit_circle(n)
    u = np.arange(n) / n
    rows = []
    for trial in range(5):
        h = np.zeros((n, 2))
        for k in range(1, 6):
            amp = rng.standard_normal((2, 2)) / k**2
            h += (amp[0] * np.cos(2 * np.pi * k * u)[:, None]
                  + amp[1] * np.sin(2 * np.pi * k * u)[:, None])
        h *= 0.01
        tau = 1e-4
        analytic = first_variation_general(curve, h, params)
        ep = tp_energy(ClosedCurve(curve.samples + tau * h, "spectral"), params)
        em = tp_energy(ClosedCurve(curve.samples - tau * h, "spectral"), params)
        fd = (ep - em) / (2 * tau)
        denom = max(abs(fd), 1e-30)
        rows.append((trial, analytic, fd, abs(analytic - fd) / denom))
    write_csv(os.path.join(out_dir, "gradient_check.csv"),
              ("trial", "first_variation", "finite_difference", "rel_error"), rows)


def _study_spectrum(out_dir: str) -> None:
    p, lam = 4.5, 1.0
    table = build_multiplier_table(p, 32)
    rows = [(k, table.rho[k],
             table.rho[k] / k ** (p - 1) if k else 0.0,
             el_multiplier(k, p, lam, table)) for k in range(33)]
    write_csv(os.path.join(out_dir, "spectrum.csv"),
              ("k", "rho", "rho_over_k_pow", "el_multiplier"), rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ks = np.arange(1, 33)
    ax.loglog(ks, table.rho[1:], "o-", label=r"$\rho_k$")
    ax.loglog(ks, table.asymptotic_c * ks ** (p - 1), "--",
              label=r"$c\,k^{p-1}$ asymptote")
    ax.set_xlabel("k")
    ax.legend()
    ax.set_title("multiplier symbol, p=4.5")
    fig.tight_layout()
    save_figure(fig, os.path.join(out_dir, "spectrum.png"))


def _study_diagnostics(out_dir: str) -> None:
    rows = []
    circle = make_primitive("circle", 256, dim=2, radius=1.0)
    rows.append(("circle", bilipschitz_constant(circle),
                 beta_number(circle, 0, 0.2),
                 sobolev_seminorm(np.cos(2 * np.pi * np.arange(256) / 256), 0.5, 2.0)))
    tref = resample_arclength(make_primitive("torus_knot", 256, a=2, b=3), 256)
    rows.append(("trefoil", bilipschitz_constant(tref),
                 beta_number(tref, 0, 0.5),
                 sobolev_seminorm(np.asarray(tref.samples), 0.5, 2.0)))
    write_csv(os.path.join(out_dir, "diagnostics.csv"),
              ("curve", "bilipschitz", "beta_sample0", "seminorm_s05_rho2"), rows)


def _study_flow(out_dir: str) -> None:
    params = EnergyParams(4.5, 2.0)
    start = make_primitive("perturbed_circle", 64, dim=2, amplitude=0.05, mode=5)
    config = FlowConfig(params=params, max_iters=20, step0=1e-2,
                        precondition=True, tol_grad=1e-6)
    trace = run_flow(start, config)
    write_csv(os.path.join(out_dir, "flow_trace.csv"), TRACE_COLUMNS, trace.rows)

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    its = [r[0] for r in trace.rows]
    axes[0].plot(its, [r[1] for r in trace.rows], "o-")
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("energy")
    axes[0].set_title("fixed-length descent")
    before = np.asarray(start.samples)
    after = np.asarray(trace.final_state.curve.samples)
    after = after * (length(ClosedCurve(before)) / 1.0)  # match scales for display
    for data, label in ((before, "start"), (after, "end")):
        closed = np.vstack([data, data[:1]])
        axes[1].plot(closed[:, 0] - closed[:, 0].mean(),
                     closed[:, 1] - closed[:, 1].mean(), label=label)
    axes[1].set_aspect("equal")
    axes[1].legend()
    axes[1].set_title("curve before / after")
    fig.tight_layout()
    save_figure(fig, os.path.join(out_dir, "flow.png"))


def run_study(out_dir: str, seed: int) -> list:
    """Runs all report sections; returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    _study_energy(out_dir)
    _study_gradient(out_dir, seed)
    _study_spectrum(out_dir)
    _study_diagnostics(out_dir)
    _study_flow(out_dir)
    return sorted(os.listdir(out_dir))
