"""Command-line interface: curvature records, geodesic integration,
verification runs and flag-curvature tables.

Numeric vector flags are comma-separated decimals (no expressions); metric
definitions live in files.  JSON and CSV schemas are documented in the README
and kept stable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import verify as verify_mod
from .curvature import flag_curvature, flag_curvature_predecessor, jacobi_operator
from .connection import christoffel
from .curves import geodesic_shoot
from .errors import FinslerError
from .metrics import TangentSample, builtin, load_metric
from .verify import VerificationPlan, default_plan, run_verification

_BARE_BUILTINS = ("euclidean", "minkowski_quartic", "sphere_round", "hyperbolic", "funk")


def _vector(text):
    try:
        return np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimals, got {text!r}")


def _resolve_metric(name_or_path, dim):
    if os.path.exists(name_or_path):
        return load_metric(name_or_path)
    if name_or_path in _BARE_BUILTINS:
        return builtin(name_or_path, dim=dim)
    if name_or_path == "riemannian_perturbation":
        return verify_mod.perturbed_riemannian(dim)
    raise FinslerError(
        f"metric {name_or_path!r} is neither a file nor a parameter-free builtin name"
    )


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_curvature(args):
    metric = _resolve_metric(args.metric, len(args.x))
    sample = TangentSample(args.x, args.v)
    ce = christoffel(metric, sample)
    record = {
        "metric": metric.name,
        "x": args.x.tolist(),
        "v": args.v.tolist(),
        "u": args.u.tolist(),
        "L": metric.value(args.x, args.v),
        "g": ce.g.tolist(),
        "C": ce.cartan.tolist(),
        "Gamma": ce.Gamma.values.tolist(),
        "N": ce.N.values.tolist(),
        "jacobi": jacobi_operator(metric, sample, args.u).tolist(),
        "flag_curvature": flag_curvature(metric, sample, args.u),
    }
    if args.w is not None:
        record["w"] = args.w.tolist()
        record["flag_curvature_predecessor"] = flag_curvature_predecessor(
            metric, sample, args.u, args.w
        )
    _write_text(args.out, json.dumps(record, indent=2, sort_keys=True))
    return 0


def _cmd_geodesic(args):
    metric = _resolve_metric(args.metric, len(args.x0))
    curve = geodesic_shoot(metric, args.x0, args.v0, args.T, tol=args.tol)
    n = metric.dim
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["t"]
        + [f"x{i+1}" for i in range(n)]
        + [f"v{i+1}" for i in range(n)]
        + ["L"]
    )
    writer.writerow(header)
    for t in np.linspace(0.0, args.T, args.points):
        x = curve.position(t)
        v = curve.velocity(t)
        writer.writerow(
            [f"{t:.12g}"]
            + [f"{c:.17g}" for c in x]
            + [f"{c:.17g}" for c in v]
            + [f"{metric.value(x, v):.17g}"]
        )
    _write_text(args.out, buf.getvalue())
    return 0


def _plan_from_file(path, seed):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    known = {"metrics", "samples", "curve_samples", "heavy_samples", "seed", "degree", "box", "tolerances", "dim"}
    unknown = set(doc) - known
    if unknown:
        raise FinslerError(f"unknown plan keys: {', '.join(sorted(unknown))}")
    dim = int(doc.get("dim", 2))
    metrics = []
    for entry in doc.get("metrics", []):
        if isinstance(entry, str):
            if entry == "riemannian_perturbation":
                metrics.append(verify_mod.perturbed_riemannian(dim))
            else:
                metrics.append(builtin(entry, dim=dim))
        elif isinstance(entry, dict) and "file" in entry:
            metrics.append(load_metric(entry["file"]))
        elif isinstance(entry, dict) and "builtin" in entry:
            kwargs = {"dim": int(entry.get("dim", dim))}
            if "radius" in entry:
                kwargs["radius"] = float(entry["radius"])
            if "matrix" in entry:
                kwargs["matrix"] = entry["matrix"]
            metrics.append(builtin(entry["builtin"], **kwargs))
        else:
            raise FinslerError(f"bad metric entry in plan: {entry!r}")
    if not metrics:
        raise FinslerError("plan lists no metrics")
    kwargs = {
        key: doc[key]
        for key in ("samples", "curve_samples", "heavy_samples", "degree", "tolerances")
        if key in doc
    }
    if "box" in doc:
        kwargs["box"] = tuple(doc["box"])
    plan_seed = int(doc.get("seed", seed))
    return VerificationPlan(metrics=metrics, seed=plan_seed, **kwargs)


def _cmd_verify(args):
    # precedence: explicit --seed, then the plan file's seed, then 7
    if args.plan == "default":
        plan = default_plan(
            samples=args.samples, seed=7 if args.seed is None else args.seed
        )
    else:
        plan = _plan_from_file(args.plan, 7 if args.seed is None else args.seed)
        if args.seed is not None:
            plan.seed = args.seed
    if args.tol is not None:
        plan.tolerances = dict.fromkeys(verify_mod.DEFAULT_TOLERANCES, args.tol)
    report = run_verification(plan)
    for line in report.summary_lines():
        print(line)
    if args.out:
        _write_text(args.out, report.to_json())
    else:
        print(report.to_json())
    return 0 if report.passed else 1


def _cmd_table(args):
    # bare builtin names default to dim 2 unless --v says otherwise
    dim = len(args.v) if args.v is not None else 2
    metric = _resolve_metric(args.metric, dim)
    n = metric.dim
    v = args.v if args.v is not None else np.eye(n)[0]
    u = args.u if args.u is not None else np.eye(n)[min(1, n - 1)]
    lo, hi = args.box
    grid = np.linspace(lo, hi, args.grid)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i+1}" for i in range(n)] + ["L", "flag_curvature"])
    for a in grid:
        for b in grid if n > 1 else [None]:
            x = np.zeros(n)
            x[0] = a
            if n > 1:
                x[1] = b
            sample = TangentSample(x, v)
            K = flag_curvature(metric, sample, u)
            writer.writerow(
                [f"{c:.12g}" for c in x]
                + [f"{metric.value(x, v):.17g}", f"{K:.17g}"]
            )
    _write_text(args.out, buf.getvalue())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="finsler",
        description="Pseudo-Finsler geometry: connection, curvature, geodesics, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="tensors and flag curvature at one sample")
    p.add_argument("--metric", required=True, help="metric file (or builtin name)")
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--v", type=_vector, required=True)
    p.add_argument("--u", type=_vector, required=True)
    p.add_argument("--w", type=_vector, default=None)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=_cmd_curvature)

    p = sub.add_parser("geodesic", help="shoot a geodesic and emit a CSV trace")
    p.add_argument("--metric", required=True)
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--v0", type=_vector, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("verify", help="run the identity verification suite")
    p.add_argument("--plan", default="default", help="plan JSON file or 'default'")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument(
        "--tol", type=float, default=None, help="override every identity tolerance"
    )
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("table", help="sweep a coordinate grid of flag curvatures")
    p.add_argument("--metric", required=True)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--v", type=_vector, default=None)
    p.add_argument("--u", type=_vector, default=None)
    p.add_argument("--box", type=_vector, default=np.array([-0.5, 0.5]))
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_table)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FinslerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
