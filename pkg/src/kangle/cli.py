"""Command line interface.

Subcommands:

* ``kangle eval FILE --point x,...``      snapshot of one point as JSON
* ``kangle verify [FILE]``                identity suites + report
* ``kangle integrate [FILE]``             torus quadrature checks
* ``kangle catalog``                      list built-in entries

Exit status: 0 success, 1 failed residual/check, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .ambient import flat_space, space_form
from .catalog import builtin_catalog, get_entry
from .dsl import parse_immersion
from .errors import KangleError
from .geometry import CLASS_NAMES, compute_snapshot
from .identities import SUITES
from .quadrature import torus_quadrature
from .runner import report_to_json, run_suite


def _parse_ambient_flag(text, n):
    text = text.strip()
    if text == "flat":
        return flat_space(2 * n)
    if text.startswith("space_form(") and text.endswith(")"):
        return space_form(float(text[len("space_form("):-1]), 2 * n)
    raise KangleError(
        f"bad --ambient value {text!r}; use flat or space_form(RHO)")


def _load_spec(args):
    if getattr(args, "entry", None):
        entry = get_entry(args.entry)
        spec = entry.spec()
    elif getattr(args, "file", None):
        with open(args.file, "r", encoding="utf-8") as fh:
            spec = parse_immersion(fh.read(), name=args.file)
        entry = None
    else:
        raise KangleError("give an .imm file or --entry NAME")
    if getattr(args, "ambient", None):
        spec = dataclasses.replace(
            spec, ambient=_parse_ambient_flag(args.ambient, spec.n))
    return spec, entry


def _cmd_eval(args):
    spec, _ = _load_spec(args)
    point = np.array([float(v) for v in args.point.split(",")])
    snap = compute_snapshot(spec, point[None, :], order=args.order,
                            skip_invalid=False)
    out = {
        "point": point.tolist(),
        "F": snap.F0[0].tolist(),
        "cos_angles": snap.cos_angles[0].tolist(),
        "classification": CLASS_NAMES[int(snap.classification[0])],
        "rank": int(snap.rank[0]),
        "norm_H": float(np.sqrt(snap.normH2[0])),
        "norm_sff2": float(np.einsum(
            "ik,jl,ijA,AB,klB->", snap.g_inv0[0], snap.g_inv0[0],
            snap.sff0[0], snap.gN0[0], snap.sff0[0])),
        "metric": snap.g0[0].tolist(),
        "pullback_form": snap.W0[0].tolist(),
        "norm_fw2": float(snap.norm_W2_0[0]),
        "kappa": None if not np.isfinite(snap.kappa[0]) else float(snap.kappa[0]),
    }
    if snap.n == 1:
        out["cos_signed"] = float(snap.cos_signed[0])
    text = json.dumps(out, indent=1)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_verify(args):
    suites = args.suite.split(",") if args.suite != "all" else "all"
    entries = None
    if args.entry:
        entries = [args.entry]
    elif args.file:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
        spec = parse_immersion(text, name=args.file)
        if args.ambient:
            spec = dataclasses.replace(
                spec, ambient=_parse_ambient_flag(args.ambient, spec.n))
            from .dsl import print_immersion
            text = print_immersion(spec)
        from .catalog import CatalogEntry
        box = ((0.0, 2 * np.pi),) * spec.domain_dim if spec.periodic \
            else ((-1.0, 1.0),) * spec.domain_dim
        entries = [CatalogEntry(name=args.file, text=text, box=box,
                                periodic=spec.periodic,
                                equal_angles=False, classification="mixed")]
    report = run_suite(entries=entries, suites=suites, points=args.points,
                       seed=args.seed, tol_abs=args.tol_abs,
                       tol_rel=args.tol_rel, order=args.order,
                       quad_grid=args.quad_grid)
    text = report_to_json(report, args.json)
    if args.json:
        print(f"report written to {args.json}")
    summary = report["summary"]
    print(f"conventions: {report['conventions']}")
    print(f"records applicable: {summary['records_applicable']}, "
          f"failed: {summary['records_failed']}")
    for name, info in summary["per_identity"].items():
        print(f"  {name:32s} applicable {info['applicable']:5d}  "
              f"failed {info['failed']:4d}  max_rel {info['max_rel']:.2e}")
    bad_entries = [e["name"] for e in report["entries"] if not e["expected_ok"]]
    if bad_entries:
        print("entries with failed self-assertions:", ", ".join(bad_entries))
    print("PASS" if report["pass"] else "FAIL")
    return 0 if report["pass"] else 1


def _cmd_integrate(args):
    spec, entry = _load_spec(args)
    if not spec.periodic:
        raise KangleError("integrate needs a periodic immersion")
    results = {}
    ok = True
    vol = torus_quadrature(spec, "volume", args.grid, order=args.order)
    results["volume"] = vol
    if args.check == "stokes":
        val = torus_quadrature(spec, "div_field", args.grid, order=args.order)
        lap = torus_quadrature(spec, "lap_cos2", args.grid, order=args.order)
        results["integral_div_field"] = val
        results["integral_lap_cos2"] = lap
        ok = abs(val) <= 1e-8 * max(vol, 1.0) and abs(lap) <= 1e-8 * max(vol, 1.0)
    else:  # eq2.3
        lhs = torus_quadrature(spec, "hodge_pair", args.grid, order=args.order)
        rhs = torus_quadrature(spec, "delta_fw_norm2", args.grid,
                               order=args.order)
        results["integral_hodge_pair"] = lhs
        results["integral_delta_fw_norm2"] = rhs
        ok = abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs), 1e-8)
    results["pass"] = bool(ok)
    text = json.dumps(results, indent=1)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if ok else 1


def _cmd_catalog(args):
    for e in builtin_catalog():
        spec = e.spec()
        amb = "flat" if spec.ambient.is_flat else \
            f"space_form({spec.ambient.rho:g})"
        flags = []
        if e.minimal:
            flags.append("minimal")
        if e.constant_angle:
            flags.append("constant-angle")
        if e.periodic:
            flags.append("periodic")
        flags.append(f"class={e.classification}")
        print(f"{e.name:28s} n={spec.n}  {amb:16s} {' '.join(flags)}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="kangle",
        description="Kahler-angle laboratory for parametric immersions")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="print a snapshot at one point")
    pe.add_argument("file", nargs="?", help=".imm file")
    pe.add_argument("--entry", help="built-in catalog entry name")
    pe.add_argument("--point", required=True, help="comma-separated coords")
    pe.add_argument("--order", type=int, default=3, choices=(3, 4))
    pe.add_argument("--ambient", help="override: flat or space_form(RHO)")
    pe.add_argument("--json", help="also write JSON here")
    pe.set_defaults(fn=_cmd_eval)

    pv = sub.add_parser("verify", help="run identity suites")
    pv.add_argument("file", nargs="?", help=".imm file (else whole catalog)")
    pv.add_argument("--entry", help="run a single catalog entry")
    pv.add_argument("--suite", default="all",
                    help="comma list of " + ",".join(SUITES) + " or all")
    pv.add_argument("--points", type=int, default=64)
    pv.add_argument("--seed", type=int, default=1234)
    pv.add_argument("--tol-abs", type=float, default=1e-7)
    pv.add_argument("--tol-rel", type=float, default=1e-5)
    pv.add_argument("--order", type=int, default=3, choices=(3, 4))
    pv.add_argument("--quad-grid", type=int, default=0,
                    help="also run quadrature checks at this grid")
    pv.add_argument("--ambient", help="override: flat or space_form(RHO)")
    pv.add_argument("--json", help="write the JSON report here")
    pv.set_defaults(fn=_cmd_verify)

    pi = sub.add_parser("integrate", help="torus quadrature checks")
    pi.add_argument("file", nargs="?", help=".imm file")
    pi.add_argument("--entry", help="built-in catalog entry name")
    pi.add_argument("--grid", type=int, default=32)
    pi.add_argument("--check", choices=("stokes", "eq2.3"), default="stokes")
    pi.add_argument("--order", type=int, default=3, choices=(3, 4))
    pi.add_argument("--ambient", help="override: flat or space_form(RHO)")
    pi.add_argument("--json", help="also write JSON here")
    pi.set_defaults(fn=_cmd_integrate)

    pc = sub.add_parser("catalog", help="list built-in entries")
    pc.set_defaults(fn=_cmd_catalog)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except KangleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
