"""Command-line front end.

Subcommands::

    check       residuals of a metric against one or both connections
    classify    verdict for a connection pair (or raw K coefficients)
    solve-fiber solution basis / profile table for the normal form
    transport   parallel transport along a curve, optional norm drift
    ellipsoid   linear equivalence of two shifted ellipsoids
    randers     navigation invariant scan of a Randers metric

Inputs are JSON files or inline JSON strings. Exit codes: 0 pass, 1 the
requested check failed, 2 bad input, 3 numeric breakdown. Output is JSON
(default) or CSV; the ``report`` subtree is a pure function of the inputs,
while ``generated_at`` carries the wall-clock stamp and is the only
non-reproducible field.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone

import numpy as np

from .classify import classify_k, classify_pair, solution_metric, \
    solution_residual
from .connections import Connection, DifferenceData
from .errors import DomainError, FinslerError, NonConvexError, \
    SingularIntegrandError, TorsionError
from .fiber import profile_table, theta_grid
from .metrics import RandersMetric, metric_from_json
from .navigation import ShiftedEllipsoid, ellipsoid_equivalence, \
    monochromatic_check_randers, randers_closed_check, randers_gb_check
from .spray import curve_from_json, douglas_residual, gb_residual, \
    parallel_transport

DEFAULT_TOLS = {
    "residual": 1e-8,     # check: max allowed douglas/gb residual
    "root": 1e-9,         # classify: root and integral condition threshold
    "drift": 1e-8,        # transport: norm drift
    "invariant": 1e-9,    # ellipsoid: invariant match
    "boundary": 1e-8,     # ellipsoid/randers: mapped boundary residual
}


def _load_spec(arg: str):
    """Inline JSON or a path to a JSON file."""
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        with open(arg) as fh:
            text = fh.read()
    return json.loads(text)


def _vector(arg: str) -> np.ndarray:
    return np.array([float(v) for v in arg.split(",")], dtype=float)


def _plain(obj):
    """Recursively convert numpy containers for json.dumps."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _tols(args) -> dict:
    tols = dict(DEFAULT_TOLS)
    for item in args.tol or ():
        name, _, value = item.partition("=")
        if not value or name not in tols:
            known = ", ".join(sorted(tols))
            raise DomainError(f"--tol expects NAME=VALUE with NAME in {{{known}}}")
        tols[name] = float(value)
    return tols


def _sample_points(args) -> np.ndarray:
    if getattr(args, "at", None):
        pts = np.atleast_2d(np.asarray(_load_spec(args.at), dtype=float))
    else:
        pts = np.zeros((1, 2))
    return pts


def _direction_fan(n: int) -> np.ndarray:
    th = theta_grid(n, hi=2.0 * np.pi)
    return np.stack([np.cos(th), np.sin(th)], axis=1)


# ---------------------------------------------------------------------------
# subcommands: each returns (report dict, passed flag, csv rows or None)

def _cmd_check(args, tols):
    metric = metric_from_json(_load_spec(args.metric))
    pts = _sample_points(args)
    dirs = _direction_fan(args.grid)
    report: dict = {"points": pts.tolist(), "directions": int(args.grid)}
    rows = [["condition", "max_residual", "tolerance", "passes"]]
    passed = True
    if args.conn_gb:
        gb = Connection.from_json(_load_spec(args.conn_gb))
        worst = 0.0
        for p in pts:
            for d in dirs:
                worst = max(worst, float(np.abs(gb_residual(metric, gb, p, d)).max()))
        ok = worst <= tols["residual"]
        report["gb"] = {"max_residual": worst, "tolerance": tols["residual"],
                        "passes": ok}
        rows.append(["gb", repr(worst), repr(tols["residual"]), str(ok)])
        passed = passed and ok
    if args.conn_d:
        dcon = Connection.from_json(_load_spec(args.conn_d))
        if not dcon.is_torsion_free():
            raise TorsionError("the projective connection must be torsion-free")
        worst = 0.0
        for p in pts:
            for d in dirs:
                res, _rho = douglas_residual(metric, dcon, p, d)
                worst = max(worst, float(np.abs(res).max()))
        ok = worst <= tols["residual"]
        report["douglas"] = {"max_residual": worst,
                             "tolerance": tols["residual"], "passes": ok}
        rows.append(["douglas", repr(worst), repr(tols["residual"]), str(ok)])
        passed = passed and ok
    if "gb" not in report and "douglas" not in report:
        raise DomainError("check needs --conn-gb and/or --conn-d")
    report["passes"] = passed
    return report, passed, rows


def _classification(args, tols):
    if args.k:
        kk = _vector(args.k)
        return classify_k(kk, tol=tols["root"])
    if not (args.conn_gb and args.conn_d):
        raise DomainError("classify needs --k or both --conn-gb and --conn-d")
    gb = Connection.from_json(_load_spec(args.conn_gb))
    dcon = Connection.from_json(_load_spec(args.conn_d))
    at = _sample_points(args)[0] if args.at else None
    return classify_pair(gb, dcon, at=at, tol=tols["root"])


def _cmd_classify(args, tols):
    result = _classification(args, tols)
    report = result.to_json_dict()
    rows = [["field", "value"], ["verdict", result.verdict],
            ["reason", result.reason]]
    for stage, value, threshold in result.diagnostics:
        rows.append([f"stage:{stage}", repr(float(value)) if np.isfinite(value)
                     else "inf", repr(float(threshold))])
    return report, True, rows


def _cmd_solve_fiber(args, tols):
    result = _classification(args, tols)
    report = result.to_json_dict()
    if result.verdict != "normal_form":
        report["solution"] = None
        return report, False, [["verdict"], [result.verdict]]
    residual = solution_residual(result)
    metric = solution_metric(result, c_witness=args.c_witness,
                             c_sin=args.c_sin)
    th = theta_grid(args.grid)
    table = profile_table(metric.profile_at(None), th)
    report["solution"] = {
        "c_witness": args.c_witness,
        "c_sin": args.c_sin,
        "witness_equation_residual": residual,
        "profile_head": table[:4].tolist(),
    }
    rows = [["theta", "f", "f_theta", "f_plus_ftt"]]
    rows += [[repr(float(v)) for v in row] for row in table]
    return report, True, rows


def _cmd_transport(args, tols):
    conn = Connection.from_json(_load_spec(args.conn))
    curve = curve_from_json(_load_spec(args.curve))
    x0 = _vector(args.X0)
    metric = metric_from_json(_load_spec(args.metric)) if args.metric else None
    result = parallel_transport(conn, curve, x0, metric=metric,
                                n_samples=args.samples)
    passed = True
    report = {
        "curve": curve.to_json(),
        "X0": x0.tolist(),
        "X_final": result.X[-1].tolist(),
        "samples": int(result.t.size),
    }
    if metric is not None:
        report["max_drift"] = result.max_drift
        report["tolerance"] = tols["drift"]
        passed = result.max_drift <= tols["drift"]
        report["passes"] = passed
    rows = [["t", "X1", "X2", "F", "drift"]]
    for i in range(result.t.size):
        f = "" if result.f_values is None else repr(float(result.f_values[i]))
        d = "" if result.f_drift is None else repr(float(result.f_drift[i]))
        rows.append([repr(float(result.t[i])), repr(float(result.X[i, 0])),
                     repr(float(result.X[i, 1])), f, d])
    return report, passed, rows


def _ellipsoid_from_spec(spec: dict) -> ShiftedEllipsoid:
    return ShiftedEllipsoid(np.asarray(spec["Q"], dtype=float),
                            np.asarray(spec["v"], dtype=float))


def _cmd_ellipsoid(args, tols):
    e1 = _ellipsoid_from_spec(_load_spec(args.e1))
    e2 = _ellipsoid_from_spec(_load_spec(args.e2))
    eq = ellipsoid_equivalence(e1, e2, tol=tols["invariant"],
                               boundary_tol=tols["boundary"])
    report = {
        "invariants": list(eq.invariants),
        "equivalent": eq.equivalent,
        "max_boundary_error": (None if not np.isfinite(eq.max_boundary_error)
                               else eq.max_boundary_error),
    }
    if eq.L is not None:
        report["L"] = eq.L.tolist()
    rows = [["field", "value"],
            ["invariant_1", repr(eq.invariants[0])],
            ["invariant_2", repr(eq.invariants[1])],
            ["equivalent", str(eq.equivalent)]]
    return report, eq.equivalent, rows


def _region_points(region: str, n: int) -> np.ndarray:
    lo1, hi1, lo2, hi2 = (float(v) for v in region.split(","))
    side = max(2, int(np.round(np.sqrt(n))))
    g1 = np.linspace(lo1, hi1, side)
    g2 = np.linspace(lo2, hi2, side)
    return np.array([[a, b] for a in g1 for b in g2])


def _cmd_randers(args, tols):
    metric = metric_from_json(_load_spec(args.metric))
    if not isinstance(metric, RandersMetric):
        raise DomainError("randers expects a metric of type randers")
    pts = (_region_points(args.region, args.samples) if args.region
           else _sample_points(args))
    gb = randers_gb_check(metric, pts, tol=tols["boundary"])
    closed = randers_closed_check(metric, pts[0])
    mono = monochromatic_check_randers(metric, pts, tol=tols["boundary"])
    passed = bool(gb.passes and mono.passes)
    report = {
        "points": pts.tolist(),
        "invariants": gb.invariants.tolist(),
        "invariant_spread": gb.spread,
        "curl": closed.curl,
        "one_form_closed": closed.closed,
        "monochromatic": mono.passes,
        "passes": passed,
    }
    rows = [["x1", "x2", "invariant"]]
    rows += [[repr(float(p[0])), repr(float(p[1])), repr(float(v))]
             for p, v in zip(pts, gb.invariants)]
    return report, passed, rows


COMMANDS = {
    "check": _cmd_check,
    "classify": _cmd_classify,
    "solve-fiber": _cmd_solve_fiber,
    "transport": _cmd_transport,
    "ellipsoid": _cmd_ellipsoid,
    "randers": _cmd_randers,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finsler2d",
        description="2D Finsler compatibility checks and classification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                       help="override a named tolerance")
        p.add_argument("--out", help="write the report to this path")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("check", help="residuals of a metric vs connections")
    p.add_argument("--metric", required=True)
    p.add_argument("--conn-gb")
    p.add_argument("--conn-d")
    p.add_argument("--at", help="JSON list of base points")
    p.add_argument("--grid", type=int, default=16,
                   help="directions per base point")
    common(p)

    p = sub.add_parser("classify", help="verdict for a connection pair or K")
    p.add_argument("--conn-gb")
    p.add_argument("--conn-d")
    p.add_argument("--k", help="comma-separated K3,K2,K1,K0")
    p.add_argument("--at", help="JSON list of base points")
    common(p)

    p = sub.add_parser("solve-fiber", help="solution profile for the normal form")
    p.add_argument("--conn-gb")
    p.add_argument("--conn-d")
    p.add_argument("--k", help="comma-separated K3,K2,K1,K0")
    p.add_argument("--at")
    p.add_argument("--c-witness", type=float, default=1.0)
    p.add_argument("--c-sin", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=64, help="table rows")
    common(p)

    p = sub.add_parser("transport", help="parallel transport along a curve")
    p.add_argument("--conn", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--X0", required=True, help="initial vector, e.g. 1,0")
    p.add_argument("--metric", help="optional metric for norm drift")
    p.add_argument("--samples", type=int, default=129)
    common(p)

    p = sub.add_parser("ellipsoid", help="linear equivalence of two ellipsoids")
    p.add_argument("--e1", required=True)
    p.add_argument("--e2", required=True)
    common(p)

    p = sub.add_parser("randers", help="navigation invariant scan")
    p.add_argument("--metric", required=True)
    p.add_argument("--at", help="JSON list of base points")
    p.add_argument("--region", help="x1min,x1max,x2min,x2max")
    p.add_argument("--samples", type=int, default=9)
    common(p)

    return parser


def _emit(report: dict, rows, args) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        payload = {"report": _plain(report),
                   "generated_at": datetime.now(timezone.utc).isoformat()}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = _tols(args)
        report, passed, rows = COMMANDS[args.command](args, tols)
    except (NonConvexError, SingularIntegrandError, np.linalg.LinAlgError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    except (FinslerError, OSError, KeyError, IndexError,
            json.JSONDecodeError, ValueError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    _emit(report, rows, args)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
