"""Suite orchestration: sampling, entry self-assertions, JSON reports."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import qmc

from . import __version__
from .catalog import builtin_catalog, get_entry
from .errors import KangleError
from .geometry import CLASS_NAMES, compute_snapshot
from .identities import (
    SUITES,
    calibrate_conventions,
    evaluate_hypothesis_fields,
    run_identity_suite,
)
from .quadrature import torus_quadrature

__all__ = ["run_suite", "sample_points", "report_to_json", "RunError"]


class RunError(KangleError):
    pass


def sample_points(box, count, seed):
    """Low-discrepancy (scrambled Halton) points in a box, seedable."""
    d = len(box)
    h = qmc.Halton(d=d, scramble=True, seed=seed)
    unit = h.random(count)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + unit * (hi - lo)


def _classification_histogram(snap):
    hist = {}
    for code, name in CLASS_NAMES.items():
        c = int(np.sum(snap.classification == code))
        if c:
            hist[name] = c
    return hist


def check_expected(entry, snap):
    """Self-assert the catalog's expected properties; returns failures."""
    failures = []
    sff_scale = 1.0 + np.max(np.abs(snap.sff0))
    if entry.minimal:
        worst = float(np.sqrt(np.max(snap.normH2)))
        if worst > 1e-8 * sff_scale:
            failures.append(f"expected minimal, max |H| = {worst:.3e}")
    if entry.equal_angles is True and not np.all(snap.equal_gate):
        spread = float(np.max(snap.cos_angles[:, 0] - snap.cos_angles[:, -1]))
        failures.append(f"expected equal angles, max spread = {spread:.3e}")
    if entry.constant_angle:
        spread = float(np.ptp(np.mean(snap.cos_angles, axis=1)))
        if spread > 1e-9:
            failures.append(f"expected constant angle, variation = {spread:.3e}")
    if entry.angle_fn is not None:
        want = entry.angle_fn(snap.points)
        dev = float(np.max(np.abs(snap.cos_angles - want[:, None])))
        if dev > 1e-9:
            failures.append(f"angle formula deviation = {dev:.3e}")
    if entry.classification in ("Lagrangian", "complex", "generic"):
        want = {"Lagrangian": 1, "complex": 2, "generic": 0}[entry.classification]
        bad = int(np.sum(snap.classification != want))
        if bad:
            failures.append(
                f"expected classification {entry.classification}, "
                f"{bad} points disagree")
    return failures


def _field_stats(fields):
    out = {}
    for name, vals in fields.items():
        v = np.asarray(vals)
        good = v[np.isfinite(v)]
        if good.size == 0:
            out[name] = {"min": None, "max": None}
        else:
            out[name] = {"min": float(np.min(good)), "max": float(np.max(good))}
    return out


def _run_entry(entry, suites, points, seed, order, tol_abs, tol_rel,
               conventions, quad_grid):
    pts = sample_points(entry.box, points, seed)
    snap = compute_snapshot(entry.spec(), pts, order=order)
    failures = check_expected(entry, snap)
    records = run_identity_suite(snap, suites, conventions,
                                 tol_abs=tol_abs, tol_rel=tol_rel)
    gate_info = None
    if entry.equal_angles == "measured":
        frac = float(np.mean(snap.equal_gate))
        gate_info = {"fraction": frac, "passed": bool(frac == 1.0)}
    fields = {}
    if "hypotheses" in suites:
        fields = _field_stats(evaluate_hypothesis_fields(snap, conventions))
    quad = []
    if quad_grid and entry.periodic:
        n_axis = quad_grid if snap.domain_dim == 2 else max(8, quad_grid // 4)
        vol = torus_quadrature(entry.spec(), "volume", n_axis, order=order)
        stokes = torus_quadrature(entry.spec(), "div_field", n_axis, order=order)
        lhs = torus_quadrature(entry.spec(), "hodge_pair", n_axis, order=order)
        rhs = torus_quadrature(entry.spec(), "delta_fw_norm2", n_axis,
                               order=order)
        quad = [
            {"check": "volume", "grid": n_axis, "value": vol},
            {"check": "stokes_divergence", "grid": n_axis, "value": stokes,
             "pass": bool(abs(stokes) <= 1e-8 * max(vol, 1.0))},
            {"check": "eq2.3", "grid": n_axis, "lhs": lhs, "rhs": rhs,
             "pass": bool(abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs), 1e-8))},
        ]
    cos = snap.cos_angles
    result = {
        "name": entry.name,
        "points_sampled": int(snap.size),
        "points_rejected": len(snap.rejected),
        "classification_histogram": _classification_histogram(snap),
        "angle_stats": {
            "min": float(np.min(cos)), "max": float(np.max(cos)),
            "mean": float(np.mean(cos)),
            "max_spread": float(np.max(cos[:, 0] - cos[:, -1])),
        },
        "expected_ok": not failures,
        "expected_failures": failures,
        "equal_angle_gate": gate_info,
        "hypothesis_fields": fields,
        "quadrature": quad,
        "residuals": [r.as_dict() for r in records],
    }
    return result


def run_suite(entries=None, suites="all", points=64, seed=1234,
              tol_abs=1e-7, tol_rel=1e-5, order=3, quad_grid=0,
              threads=None):
    """Run the selected identity suites over catalog entries.

    Deterministic given the seed; returns the report dictionary.  The
    overall ``pass`` is false iff any applicable residual fails, any entry
    self-assertion fails, or any quadrature check fails.
    """
    if entries is None:
        entry_objs = builtin_catalog()
    else:
        entry_objs = [e if not isinstance(e, str) else get_entry(e)
                      for e in entries]
    if suites == "all" or suites == ["all"]:
        suites = list(SUITES)
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise RunError(f"unknown suites: {unknown}; available: {SUITES}")
    conventions = calibrate_conventions(order)
    if threads is None:
        threads = int(os.environ.get("KANGLE_THREADS", "0")) or os.cpu_count()

    args = [(e, suites, points, seed, order, tol_abs, tol_rel, conventions,
             quad_grid) for e in entry_objs]
    if threads > 1 and len(entry_objs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: _run_entry(*a), args))
    else:
        results = [_run_entry(*a) for a in args]

    per_identity = {}
    n_applicable = n_failed = 0
    for res in results:
        for rec in res["residuals"]:
            info = per_identity.setdefault(
                rec["id"], {"applicable": 0, "failed": 0, "max_rel": 0.0,
                            "max_abs": 0.0})
            if rec["applicable"]:
                n_applicable += 1
                info["applicable"] += 1
                if np.isfinite(rec["rel_residual"]):
                    info["max_rel"] = max(info["max_rel"], rec["rel_residual"])
                info["max_abs"] = max(info["max_abs"], rec["abs_residual"])
                if not rec["pass"]:
                    n_failed += 1
                    info["failed"] += 1
        res["residuals"].sort(key=lambda r: (r["id"], r["point_index"]))

    ok = (n_failed == 0
          and all(r["expected_ok"] for r in results)
          and all(q.get("pass", True) for r in results for q in r["quadrature"]))
    report = {
        "schema": 1,
        "version": __version__,
        "conventions": conventions.as_dict(),
        "seed": seed,
        "order": order,
        "points_per_entry": points,
        "suites": list(suites),
        "tolerances": {"abs": tol_abs, "rel": tol_rel},
        "entries": sorted(results, key=lambda r: r["name"]),
        "summary": {
            "records_applicable": n_applicable,
            "records_failed": n_failed,
            "per_identity": dict(sorted(per_identity.items())),
        },
        "pass": bool(ok),
    }
    return report


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def report_to_json(report, path=None):
    text = json.dumps(report, indent=1, sort_keys=True, default=_json_default)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
