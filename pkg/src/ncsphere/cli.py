"""Command-line front end: verification suites and dataset emitters.

Subcommands:

* ``verify``    -- run the cross-verification suites and report violations
* ``curvature`` -- curvature profile dataset over a latitude grid
* ``flow``      -- commutative field-line dataset from a ring of seeds
* ``modes``     -- p-mode residual table for a mode-set file

Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical-domain
error.  Output is deterministic: identical configurations produce byte
identical files (floats printed with 17 significant digits, no timestamps).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import flow, geometry, modes
from .starprod import (
    AnalyticityError,
    Deformation,
    DomainError,
    SingularityError,
    TrigPoly,
    basis_f,
    star_lattice,
    star_series,
    verify_identities,
)


def _fmt(v) -> str:
    return f"{v:.17g}"


def _deformation_from(args) -> Deformation:
    if args.alpha is not None and args.h is not None:
        raise DomainError("supply exactly one of --alpha or --h")
    if args.h is not None:
        return Deformation.real(args.h)
    alpha = args.alpha if args.alpha is not None else 0.2
    return Deformation.from_alpha(alpha)


def _config_lines(args, d: Deformation) -> list:
    keys = sorted(k for k in vars(args) if k not in ("func", "out"))
    lines = [f"# config {k}={getattr(args, k)}" for k in keys]
    lines.append(f"# config derived_alpha={_fmt(d.alpha)}")
    lines.append(f"# config derived_h={_fmt(d.h.real)}")
    threads = os.environ.get("NCSPHERE_THREADS")
    if threads:
        lines.append(f"# config threads_cap={threads}")
    return lines


def _write(out_path, text: str):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verify


def _sample_modeset() -> modes.ModeSet:
    def tp(*terms):
        out = TrigPoly()
        for kind, n, c in terms:
            out = out + c * (getattr(TrigPoly, kind)(n) if n else TrigPoly.const(1.0))
        return out

    v0 = (
        tp(("cosx", 2, 0.2), ("const", 0, 0.7), ("sinx", 1, 0.1)),
        tp(("const", 0, 0.4), ("sinx", 2, 0.15), ("cosx", 1, -0.1)),
    )
    vc = [
        (tp(("sinx", 1, 0.3), ("cosx", 1, 0.1)), tp(("const", 0, 0.12), ("cosx", 2, 0.2))),
        (tp(("cosx", 2, 0.15), ("const", 0, -0.05)), tp(("sinx", 1, 0.22))),
        (tp(("cosx", 1, 0.05), ("sinx", 2, 0.08)), tp(("const", 0, 0.07), ("cosx", 1, 0.04))),
    ]
    vs = [
        (tp(("cosx", 1, 0.2), ("const", 0, -0.1)), tp(("sinx", 2, 0.11), ("const", 0, 0.06))),
        (tp(("sinx", 1, 0.09), ("cosx", 2, -0.07)), tp(("const", 0, 0.13), ("sinx", 1, 0.05))),
        (tp(("sinx", 2, 0.06)), tp(("cosx", 2, 0.1), ("const", 0, -0.04))),
    ]
    return modes.ModeSet.from_trigpolys(v0, vc, vs)


def run_verification_suite(d: Deformation, tol_override=None):
    """All cross-checks with their stated tolerances; returns result rows."""
    alpha = d.alpha
    checks = []

    def add(name, violation, threshold):
        thr = tol_override if tol_override is not None else threshold
        checks.append((name, float(violation), thr, float(violation) <= thr))

    rep = verify_identities(d)
    for key in ("flip", "mixed_left", "mixed_right", "shift_permutation", "closed_products"):
        add(f"star.{key}", rep.checks[key], 1e-13)
    add("star.rescaling", rep.checks["rescaling"], 1e-12)

    worst = 0.0
    for a in range(1, 5):
        for b in range(1, 5):
            fa, fb = basis_f(a), basis_f(b)
            worst = max(worst, star_series(fa, fb, d, 25).distance(star_lattice(fa, fb, d)))
    add("star.series_vs_lattice", worst, 1e-10)

    e = geometry.build_embedding(d)
    E1, E2 = geometry.tangent_basis(e)
    unit = geometry.star_dot(e.lam, e.lam, d) - TrigPoly.const(1.0)
    tang = geometry.star_dot(e.lam, E1, d)
    broke = geometry.star_dot(e.lam, E2, d) + alpha * TrigPoly.sinx(2)
    add("geometry.embedding_identities", max(unit.norm(), tang.norm(), broke.norm()), 1e-13)

    worst = ydep = 0.0
    for x in np.linspace(0.15, math.pi - 0.15, 20):
        ga = geometry.metric_from_basis(e, x, 0.9)
        gb = geometry.metric_from_basis(e, x, 2.2)
        ydep = max(ydep, float(np.max(np.abs(ga - gb))))
        worst = max(worst, float(np.max(np.abs(ga - geometry.metric_closed(x, alpha)))))
    add("geometry.metric_y_independence", ydep, 1e-13)
    add("geometry.metric_assembly", worst, 1e-10)

    worst = 0.0
    for x in np.linspace(0.2, math.pi - 0.2, 20):
        worst = max(worst, geometry.gamma_consistency(x, alpha).max_violation)
    add("geometry.gamma_consistency", worst, 1e-12)

    sing = geometry.singularity_locus(alpha)
    worst = 0.0
    for x in np.linspace(0.25, math.pi - 0.25, 50):
        if any(abs(x - s) < 0.1 for s in sing):
            continue
        ra, sa = geometry.ricci_assembled(x, alpha)
        rc, sc = geometry.ricci_closed(x, alpha)
        worst = max(worst, float(np.max(np.abs(ra - rc))), abs(sa - sc))
    add("geometry.ricci_assembly_vs_closed", worst, 1e-10)

    a0, b0 = 0.05, 1.0
    zf = flow.zero_order_solution(a0, b0)
    xmin, xmax = zf.params["domain"]
    worst = 0.0
    for x in np.linspace(xmin + 0.05, xmax - 0.05, 40):
        r1, r2 = flow.alphazero_residual(zf, x)
        worst = max(worst, abs(r1), abs(r2))
    add("flow.zero_order_residual", worst, 1e-12)

    dev = flow.first_order_deviation(a0, b0, 0.1, 0.2)
    worst = 0.0
    for x in np.linspace(xmin + 0.05, xmax - 0.05, 25):
        if abs(x - math.pi / 2) < 0.02:
            continue
        r1, r2 = flow.deviation_system_residual(dev, x)
        worst = max(worst, abs(r1), abs(r2))
    add("flow.deviation_closed_forms", worst, 1e-8)

    sol = flow.deviation_ode_solve(a0, b0, 0.1, 0.2, 1.0, 1.5, dt=1e-4)
    xe, om, de = sol[-1]
    add(
        "flow.rk4_vs_closed",
        max(abs(om - dev.omega(xe)), abs(de - dev.delta(xe))),
        1e-7,
    )

    ms = _sample_modeset()
    ms0 = modes.ModeSet.y_symmetric(ms.v0[0], ms.v0[1])
    fld = flow.YSymField(ms.v0[0], ms.v0[1])
    A = 1.0 / math.cosh(d.h.real)
    worst = 0.0
    for x in (0.7, 1.3, 2.1):
        E = modes.p_mode_residuals(ms0, d, x, 1)
        rp, rm = flow.ysym_residual(fld, x, d)
        worst = max(
            worst,
            abs(rp - A * (E[0] - 1j * E[1]) / 8.0) / max(abs(rp), 1e-30),
            abs(rm - A * (E[0] + 1j * E[1]) / 8.0) / max(abs(rm), 1e-30),
        )
    add("modes.p1_reduction", worst, 1e-10)

    asm = modes.ModeAssembly(ms, d)
    worst = 0.0
    for p in (1, 2):
        for x in (0.6, 1.4, 2.3):
            E = asm.residuals(x, p)
            Q = modes.quadrature_residuals(ms, d, x, p)
            worst = max(worst, float(np.max(np.abs(E - Q))))
    add("modes.quadrature_oracle", worst, 1e-8)

    return checks


def cmd_verify(args) -> int:
    d = _deformation_from(args)
    checks = run_verification_suite(d, tol_override=args.tol)
    lines = _config_lines(args, d)
    ok = True
    for name, violation, threshold, passed in checks:
        ok &= passed
        lines.append(
            f"{'PASS' if passed else 'FAIL'} {name:<40s} violation={violation:.3e} "
            f"threshold={threshold:.1e}"
        )
    lines.append(f"{'OK' if ok else 'FAILED'} {sum(p for *_, p in checks)}/{len(checks)} checks")
    _write(args.out, "\n".join(lines) + "\n")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# curvature


def cmd_curvature(args) -> int:
    d = _deformation_from(args)
    alpha = d.alpha
    if args.grid < 2:
        raise DomainError("--grid must be >= 2")
    sing = geometry.singularity_locus(alpha)
    rows = []
    for i in range(args.grid):
        x = i * math.pi / args.grid
        if any(abs(x - s) < 1e-6 for s in sing):
            continue
        ricci, scal = geometry.ricci_closed(x, alpha)
        rows.append([x, ricci[0, 0], ricci[0, 1], ricci[1, 0], ricci[1, 1], scal])
    if args.format == "json":
        payload = {
            "alpha": float(np.real(alpha)),
            "singularities": [float(s) for s in sing],
            "columns": ["x", "R11", "R12", "R21", "R22", "R"],
            "rows": [[float(np.real(v)) for v in row] for row in rows],
        }
        _write(args.out, json.dumps(payload, indent=1, sort_keys=True) + "\n")
        return 0
    lines = _config_lines(args, d)
    lines.append(f"# singularities {','.join(_fmt(s) for s in sing) if sing else 'none'}")
    lines.append("x,R11,R12,R21,R22,R")
    for row in rows:
        lines.append(",".join(_fmt(np.real(v)) for v in row))
    _write(args.out, "\n".join(lines) + "\n")
    if args.out:
        sidecar = {
            "alpha": float(np.real(alpha)),
            "h": d.h.real,
            "singularities": [float(s) for s in sing],
        }
        with open(args.out + ".singularities.json", "w") as fh:
            json.dump(sidecar, fh, indent=1, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# flow


def cmd_flow(args) -> int:
    d = _deformation_from(args)
    a0, b0 = args.a0, args.b0
    field = flow.zero_order_solution(a0, b0)
    xmin, xmax = field.params["domain"]
    lines = _config_lines(args, d)
    lines.append(f"# domain {_fmt(xmin)},{_fmt(xmax)}")
    lines.append("seed,t,x,y,X,Y,Z,planarity")

    def emit(seed, t, x, y, planarity):
        X = math.sin(x) * math.cos(y)
        Y = math.sin(x) * math.sin(y)
        Z = math.cos(x)
        vals = [t, x, y, X, Y, Z]
        lines.append(f"{seed}," + ",".join(_fmt(v) for v in vals) + f",{_fmt(planarity)}")

    # forbidden-zone boundary circles (seeds -1 north, -2 south)
    for seed, xb in ((-1, xmin), (-2, xmax)):
        for k in range(64):
            emit(seed, 0.0, xb, 2.0 * math.pi * k / 64.0, float("nan"))

    x0 = xmin + 0.01
    for k in range(args.seed_count):
        y0 = 2.0 * math.pi * k / args.seed_count
        trace = flow.trace_flow(field, (x0, y0), args.t_end, dt=1e-3)
        planarity = trace.planarity()
        for t, x, y in trace.samples:
            emit(k, t, x, y, planarity)
    _write(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# modes


def cmd_modes(args) -> int:
    d = _deformation_from(args)
    try:
        with open(args.modeset_file) as fh:
            text = fh.read()
        ms = modes.modeset_from_json(text)
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"mode-set parse error at line {exc.lineno}: {exc.msg}\n")
        return 2
    except (KeyError, ValueError) as exc:
        sys.stderr.write(f"mode-set parse error: {exc}\n")
        return 2
    if args.modes is not None and ms.N != args.modes:
        sys.stderr.write(f"mode-set truncation N={ms.N} does not match --modes {args.modes}\n")
        return 2

    asm = modes.ModeAssembly(ms, d)
    rows = []
    for p in range(1, args.p + 1):
        for i in range(args.grid):
            x = (i + 0.5) * math.pi / args.grid
            E = asm.residuals(x, p)
            c1, c2 = asm.constraints(x, p)
            rows.append(
                {
                    "p": p,
                    "x": x,
                    "residuals": [[float(v.real), float(v.imag)] for v in E],
                    "constraints": [
                        [float(c1.real), float(c1.imag)],
                        [float(c2.real), float(c2.imag)],
                    ],
                    "constraint_violation": float(max(abs(c1), abs(c2))),
                }
            )
    if args.format == "csv":
        lines = _config_lines(args, d)
        lines.append(
            "p,x,"
            + ",".join(f"re_eq{i},im_eq{i}" for i in range(1, 7))
            + ",constraint_violation"
        )
        for row in rows:
            flat = [v for pair in row["residuals"] for v in pair]
            lines.append(
                f"{row['p']},{_fmt(row['x'])},"
                + ",".join(_fmt(v) for v in flat)
                + f",{_fmt(row['constraint_violation'])}"
            )
        _write(args.out, "\n".join(lines) + "\n")
        return 0
    payload = {
        "N": ms.N,
        "alpha": float(np.real(d.alpha)),
        "h": d.h.real,
        "rows": rows,
    }
    _write(args.out, json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ncsphere",
        description="Star-product calculus, curvature and auto-parallel flow "
        "on the deformed 2-sphere.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=float, default=None, help="deformation alpha = tanh h")
        p.add_argument("--h", type=float, default=None, help="deformation parameter h")
        p.add_argument("--out", type=str, default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)

    pv = sub.add_parser("verify", help="run the cross-verification suites")
    common(pv)
    pv.add_argument("--tol", type=float, default=None, help="override every threshold")
    pv.set_defaults(func=cmd_verify)

    pc = sub.add_parser("curvature", help="curvature profile dataset")
    common(pc)
    pc.add_argument("--grid", type=int, default=200)
    pc.set_defaults(func=cmd_curvature)

    pf = sub.add_parser("flow", help="commutative field-line dataset")
    common(pf)
    pf.add_argument("--a0", type=float, required=True)
    pf.add_argument("--b0", type=float, required=True)
    pf.add_argument("--c0", type=float, default=0.0)
    pf.add_argument("--d0", type=float, default=0.0)
    pf.add_argument("--seed-count", type=int, default=8)
    pf.add_argument("--t-end", type=float, default=6.0)
    pf.set_defaults(func=cmd_flow)

    pm = sub.add_parser("modes", help="p-mode residual table for a mode-set file")
    common(pm)
    pm.add_argument("modeset_file", type=str)
    pm.add_argument("--p", type=int, default=2, help="largest mode index to evaluate")
    pm.add_argument("--modes", type=int, default=None, help="expected truncation (validated)")
    pm.add_argument("--grid", type=int, default=5)
    pm.set_defaults(func=cmd_modes)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, SingularityError, AnalyticityError) as exc:
        sys.stderr.write(f"numerical-domain error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
