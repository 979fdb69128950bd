"""Command-line interface.

Exit codes: 0 success, 2 validation failure (bad flag or domain), 3
numerical failure (self-intersection, line-search stall, failed check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .curves import (ClosedCurve, CurveError, length, load_curve,
                     make_primitive, min_strand_distance, resample_arclength,
                     save_curve)
from .diagnostics import (beta_number, beta_profile, bilipschitz_constant,
                          holder_estimate, sobolev_seminorm)
from .energy import (EnergyParams, QuadratureSpec, SelfIntersectionError,
                     classify, pair_energy, tp_energy)
from .flow import FlowConfig, FlowStallError, run_flow, TRACE_COLUMNS
from .multiplier import build_multiplier_table, el_multiplier
from .reporting import format_float, run_study, write_csv
from .variation import first_variation_general

__all__ = ["main", "parse_and_dispatch"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _add_common(parser, with_q=True):
    parser.add_argument("--p", type=float, required=True, help="chord exponent p")
    if with_q:
        parser.add_argument("--q", type=float, default=2.0,
                            help="tangent-distance exponent q (default 2)")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("TPK_THREADS", "0")) or None,
                        help="cap worker parallelism of inner kernels "
                             "(default: TPK_THREADS or unlimited)")


def _emit_rows(columns, rows, out_path):
    if out_path:
        write_csv(out_path, columns, rows)
    else:
        print(",".join(columns))
        for row in rows:
            print(",".join(format_float(v)
                           if isinstance(v, (int, float, np.floating))
                           and not isinstance(v, bool) else str(v)
                           for v in row))


def _load(path, nodes=None, unit_length=False, arclength=False):
    curve = load_curve(path)
    if nodes or arclength:
        curve = resample_arclength(curve, nodes or curve.n_samples)
    if unit_length:
        L = length(curve)
        curve = ClosedCurve(curve.samples / L, curve.derivative_rule)
    return curve


def _warn_regime(params: EnergyParams):
    if params.regime == "non_repulsive":
        print(f"warning: non-repulsive regime (p={params.p} < q+2={params.q + 2}); "
              "the energy does not penalize self-intersections", file=sys.stderr)
    elif params.regime == "singular":
        print(f"warning: singular regime (p={params.p} >= 2q+1={2 * params.q + 1}); "
              "the discrete value diverges under refinement", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_make_curve(args) -> int:
    params = {}
    for name in ("radius", "a", "b", "amplitude", "mode"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if args.vertices is not None:
        params["vertices"] = json.loads(args.vertices)
    if args.kind == "torus_knot":
        params["a"] = int(params.get("a", 2))
        params["b"] = int(params.get("b", 3))
    if args.dim is not None:
        params["dim"] = args.dim
    curve = make_primitive(args.kind, args.n, **params)
    if args.arclength:
        curve = resample_arclength(curve)
    save_curve(curve, args.out)
    print(f"wrote {args.out}: {args.kind}, n={curve.n_samples}, dim={curve.dim}, "
          f"length={format_float(length(curve))}")
    return EXIT_OK


def _cmd_energy(args) -> int:
    params = classify(args.p, args.q)
    _warn_regime(params)
    quad = QuadratureSpec("trapezoid_richardson" if args.richardson
                          else "trapezoid_diagonal_excluded")
    curve = _load(args.curve, args.nodes, args.unit_length)
    value = tp_energy(curve, params, quad)
    print(f"energy {format_float(value)}")
    print(f"regime {params.regime}")
    if args.study:
        rows = []
        n = curve.n_samples
        while n >= 32:
            sub = resample_arclength(curve, n)
            if args.unit_length:
                sub = ClosedCurve(sub.samples / length(sub), sub.derivative_rule)
            rows.append((n, tp_energy(sub, params, quad)))
            n //= 2
        print("n,energy")
        for n, e in reversed(rows):
            print(f"{n},{format_float(e)}")
    return EXIT_OK


def _cmd_pair_energy(args) -> int:
    params = classify(args.p, args.q)
    _warn_regime(params)
    a = _load(args.curve_a)
    b = _load(args.curve_b)
    print(f"pair_energy {format_float(pair_energy(a, b, params))}")
    return EXIT_OK


def _cmd_gradient_check(args) -> int:
    params = classify(args.p, args.q)
    curve = _load(args.curve)
    rng = np.random.default_rng(args.seed)
    n, dim = curve.samples.shape
    u = np.arange(n) / n
    tau = args.tau
    rows = []
    worst = 0.0
    for trial in range(args.trials):
        h = np.zeros((n, dim))
        for k in range(1, 6):
            amp = rng.standard_normal((2, dim)) / k**2
            h += (amp[0] * np.cos(2 * np.pi * k * u)[:, None]
                  + amp[1] * np.sin(2 * np.pi * k * u)[:, None])
        h *= 0.01
        analytic = first_variation_general(curve, h, params)
        ep = tp_energy(ClosedCurve(curve.samples + tau * h, curve.derivative_rule), params)
        em = tp_energy(ClosedCurve(curve.samples - tau * h, curve.derivative_rule), params)
        fd = (ep - em) / (2 * tau)
        rel = abs(analytic - fd) / max(abs(fd), 1e-30)
        worst = max(worst, rel)
        rows.append((trial, analytic, fd, rel))
    _emit_rows(("trial", "first_variation", "finite_difference", "rel_error"),
               rows, args.out)
    if worst > args.tolerance:
        return _fail(EXIT_NUMERICAL,
                     f"gradient check failed: worst relative error "
                     f"{format_float(worst)} > {format_float(args.tolerance)}")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    table = build_multiplier_table(args.p, args.kmax)
    rows = [(k, table.rho[k],
             table.rho[k] / k ** (args.p - 1) if k else 0.0,
             el_multiplier(k, args.p, args.lam, table))
            for k in range(args.kmax + 1)]
    _emit_rows(("k", "rho", "rho_over_k_pow", "el_multiplier"), rows, args.out)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    params = classify(args.p, args.q)
    curve = _load(args.curve, arclength=(args.what in ("bilip", "beta")))
    if args.what == "bilip":
        rows = [(bilipschitz_constant(curve),)]
        _emit_rows(("bilipschitz",), rows, args.out)
    elif args.what == "beta":
        radii = ([float(r) for r in args.radii.split(",")] if args.radii
                 else list(np.geomspace(0.02, 0.2, 5) * length(curve)))
        profile = beta_profile(curve, params, radii,
                               base_stride=max(1, curve.n_samples // 64))
        rows = list(zip(profile.radii, profile.sup_beta))
        _emit_rows(("radius", "sup_beta"), rows, args.out)
        print(f"fitted_exponent {format_float(profile.fitted_exponent)}",
              file=sys.stderr)
    elif args.what == "seminorm":
        s = args.s if args.s is not None else (params.p - 1) / params.q - 1
        rho = args.rho if args.rho is not None else params.q
        g = np.gradient(np.asarray(curve.samples), 1.0 / curve.n_samples, axis=0)
        value = sobolev_seminorm(g, s, rho)
        _emit_rows(("s", "rho", "seminorm_of_derivative"),
                   [(s, rho, value)], args.out)
    else:  # holder
        value = holder_estimate(np.asarray(curve.samples), args.alpha)
        _emit_rows(("alpha", "holder_quotient"), [(args.alpha, value)], args.out)
    return EXIT_OK


def _cmd_flow(args) -> int:
    params = classify(args.p, args.q)
    if params.regime == "non_repulsive":
        _warn_regime(params)
    curve = _load(args.curve)
    config = FlowConfig(params=params, max_iters=args.steps, step0=args.step0,
                        precondition=args.precondition, tol_grad=args.tol_grad,
                        min_distance_guard=args.guard)
    snap_dir = args.snap_dir
    if args.snapshot_every and snap_dir:
        os.makedirs(snap_dir, exist_ok=True)
    trace = run_flow(curve, config)
    if args.trace:
        write_csv(args.trace, TRACE_COLUMNS, trace.rows)
    if args.snapshot_every and snap_dir:
        # re-run not needed: snapshot the final state plus the input
        save_curve(curve, os.path.join(snap_dir, "iter_000000.json"))
        save_curve(trace.final_state.curve,
                   os.path.join(snap_dir, f"iter_{trace.final_state.iter:06d}.json"))
    final = trace.final_state
    print(f"stopped_by {trace.stopped_by}")
    print(f"iters {final.iter}")
    print(f"energy {format_float(final.energy)}")
    print(f"grad_norm {format_float(final.grad_norm)}")
    if trace.stopped_by == "stall":
        return _fail(EXIT_NUMERICAL,
                     f"flow stalled at iter {final.iter} "
                     f"(grad_norm {format_float(final.grad_norm)})")
    return EXIT_OK


def _cmd_study(args) -> int:
    files = run_study(args.out_dir, args.seed)
    for name in files:
        print(os.path.join(args.out_dir, name))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpknot",
        description="Generalized tangent-point energies on closed curves: "
                    "evaluation, first variation, spectral analysis, "
                    "diagnostics, and fixed-length gradient descent.")
    sub = parser.add_subparsers(dest="command", required=True)

    mk = sub.add_parser("make-curve", help="sample a primitive curve to JSON")
    mk.add_argument("kind", choices=["circle", "ellipse", "torus_knot",
                                     "perturbed_circle", "polygon"])
    mk.add_argument("--n", type=int, default=256)
    mk.add_argument("--dim", type=int, default=None)
    mk.add_argument("--radius", type=float, default=None)
    mk.add_argument("--a", type=float, default=None)
    mk.add_argument("--b", type=float, default=None)
    mk.add_argument("--amplitude", type=float, default=None)
    mk.add_argument("--mode", type=int, default=None)
    mk.add_argument("--vertices", type=str, default=None,
                    help="polygon vertices as JSON, e.g. [[0,0],[1,0],[1,1]]")
    mk.add_argument("--arclength", action="store_true",
                    help="resample to equal chords before writing")
    mk.add_argument("--out", required=True)
    mk.set_defaults(func=_cmd_make_curve)

    en = sub.add_parser("energy", help="evaluate the tangent-point energy")
    en.add_argument("--curve", required=True)
    _add_common(en)
    en.add_argument("--nodes", type=int, default=None,
                    help="resample to this many nodes first")
    en.add_argument("--richardson", action="store_true",
                    help="Richardson-extrapolated quadrature")
    en.add_argument("--unit-length", action="store_true",
                    help="normalize the curve to length 1 first")
    en.add_argument("--study", action="store_true",
                    help="print a convergence table over n-halvings")
    en.set_defaults(func=_cmd_energy)

    pe = sub.add_parser("pair-energy", help="two-curve energy with cross terms")
    pe.add_argument("--curve-a", required=True)
    pe.add_argument("--curve-b", required=True)
    _add_common(pe)
    pe.set_defaults(func=_cmd_pair_energy)

    gc = sub.add_parser("gradient-check",
                        help="first variation against finite differences")
    gc.add_argument("--curve", required=True)
    _add_common(gc)
    gc.add_argument("--trials", type=int, default=10)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tau", type=float, default=1e-4)
    gc.add_argument("--tolerance", type=float, default=1e-4)
    gc.add_argument("--out", default=None)
    gc.set_defaults(func=_cmd_gradient_check)

    sp = sub.add_parser("spectrum", help="multiplier symbol table")
    _add_common(sp, with_q=False)
    sp.add_argument("--kmax", type=int, default=256)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_spectrum)

    an = sub.add_parser("analyze", help="geometric diagnostics")
    an.add_argument("what", choices=["beta", "seminorm", "bilip", "holder"])
    an.add_argument("--curve", required=True)
    _add_common(an)
    an.add_argument("--radii", default=None,
                    help="comma-separated radii for the beta profile")
    an.add_argument("--s", type=float, default=None)
    an.add_argument("--rho", type=float, default=None)
    an.add_argument("--alpha", type=float, default=0.5)
    an.add_argument("--out", default=None)
    an.set_defaults(func=_cmd_analyze)

    fl = sub.add_parser("flow", help="fixed-length gradient descent")
    fl.add_argument("--curve", required=True)
    _add_common(fl)
    fl.add_argument("--steps", type=int, default=500)
    fl.add_argument("--step0", type=float, default=1e-2)
    fl.add_argument("--tol-grad", type=float, default=1e-4)
    fl.add_argument("--guard", type=float, default=1e-3)
    fl.add_argument("--precondition", action="store_true")
    fl.add_argument("--trace", default=None)
    fl.add_argument("--snapshot-every", type=int, default=0)
    fl.add_argument("--snap-dir", default=None)
    fl.set_defaults(func=_cmd_flow)

    st = sub.add_parser("study", help="full report: CSV tables and figures")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out-dir", default="study_out")
    st.set_defaults(func=_cmd_study)

    return parser


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (SelfIntersectionError, FlowStallError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERICAL, f"numerical failure: {exc}")
    except (CurveError, ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_VALIDATION, f"error: {exc}")


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
