"""Command-line interface.

Exit codes: 0 ok, 1 verdict failed, 2 bad configuration, 3 solver not
converged, 4 numerical failure (singular integrand, degenerate mesh,
inconsistent scan).
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import gacheck, plateau, radon, reports, sampling, specfile
from . import metric as M
from .cartan import CartanIntegrand, growth_bounds
from .errors import (ConfigurationError, FinslerError, MeshDegenerationError, NotFinslerError,
                     ScanInconsistentError, SingularIntegrandError)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = range(5)
DEFAULT_METRIC = {"family": "randers", "b": [0.3, 0.0, 0.0]}

log = logging.getLogger("finslerarea")


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _schedule(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps schedule {text!r}") from exc
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive")
    return vals


def _metric_doc(path):
    if path is None:
        return dict(DEFAULT_METRIC)
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc
    specfile.metric_from_dict(doc)
    return doc


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _x_samples(metric, count, seed):
    if not metric.x_dependent:
        return None
    return np.random.default_rng(seed).uniform(-1.0, 1.0, (count, metric.dim))


def _emit(args, name, payload, config, rows=None):
    out = _out_dir(args)
    if args.format == "csv":
        path = out / f"{name}.csv"
        reports.write_csv(path, rows if rows is not None else [reports.flatten(payload)], config)
    else:
        path = out / f"{name}.json"
        reports.write_json(path, reports.stamp(payload, config))
    log.info("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_metric(args):
    doc = _metric_doc(args.metric)
    metric = specfile.metric_from_dict(doc)
    config = {"command": "check-metric", "metric": doc, "samples": args.samples, "seed": args.seed}
    xs = _x_samples(metric, args.x_samples, args.seed)
    fin_reports = [M.check_finsler(metric, x, args.samples, args.seed)
                   for x in ([None] if xs is None else xs)]
    fin = min(fin_reports, key=lambda r: (r.verdict, r.min_eigenvalue if np.isfinite(r.min_eigenvalue)
                                          else -np.inf))
    payload = {"finsler": fin.to_dict(), "verdicts": {"finsler": fin.verdict}}
    if fin_reports and all(r.min_value > 0 for r in fin_reports):
        ga = gacheck.sufficient_condition(metric, xs, m=doc.get("m", 2), sample_count=args.samples,
                                          seed=args.seed)
        payload["ga"] = ga.to_dict()
        payload["verdicts"]["ga_direct"] = ga.direct_ga
        ci = CartanIntegrand(metric, doc.get("m", 2), args.quad_n)
        try:
            payload["growth_bounds"] = growth_bounds(ci, max(args.samples, 500), xs, args.seed).to_dict()
        except (NotFinslerError, SingularIntegrandError) as exc:
            payload["growth_bounds"] = {"error": str(exc)}
    else:
        payload["ga"] = None
        payload["verdicts"]["ga_direct"] = False
    ok = all(payload["verdicts"].values())
    payload["passed"] = ok
    _emit(args, "check_metric", payload, config)
    print(f"check-metric: {'PASS' if ok else 'FAIL'} {payload['verdicts']}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_threshold_scan(args):
    family = args.family
    doc = None
    if args.metric is not None:
        doc = _metric_doc(args.metric)
        metric = specfile.metric_from_dict(doc)
        if not isinstance(metric, M.AlphaBetaMetric):
            raise ConfigurationError("threshold-scan needs an (alpha, beta) metric")
        family = metric.phi
    elif family not in M.FAMILY_PHI:
        raise ConfigurationError(f"--family must be one of {', '.join(M.FAMILY_PHI)} (or give --metric)")
    config = {"command": "threshold-scan", "family": args.family, "metric": doc, "b_low": args.b_low,
              "b_high": args.b_high, "tol": args.tol, "samples": args.samples, "seed": args.seed}
    try:
        res = gacheck.threshold_scan(family, args.b_low, args.b_high, args.tol,
                                     sample_count=args.samples, seed=args.seed)
    except ScanInconsistentError as exc:
        _emit(args, "threshold_scan", {"error": str(exc), "table": exc.table}, config, exc.table)
        raise
    payload = res.to_dict()
    _emit(args, "threshold_scan", payload, config, res.table)
    print(f"threshold-scan: {res.family} critical |b| = {res.critical_b:.6f} "
          f"bracket [{res.bracket[0]:.6f}, {res.bracket[1]:.6f}]")
    return EXIT_OK


def cmd_solve_plateau(args):
    doc = _metric_doc(args.metric) if args.metric else {"family": "euclidean"}
    metric = specfile.metric_from_dict(doc)
    curve = specfile.load_curve(args.curve)
    cfg = plateau.SolveConfig(eps_schedule=args.eps_schedule, tol=args.tol, max_iter=args.max_iter,
                              length_nodes=args.quad_n, bound_samples=max(args.samples, 500))
    config = {"command": "solve-plateau", "metric": doc, "curve": curve.describe(),
              "rings": args.rings, "quad_n": args.quad_n, "eps_schedule": list(args.eps_schedule),
              "tol": args.tol, "max_iter": args.max_iter, "seed": args.seed}
    ci = CartanIntegrand(metric, doc.get("m", 2), args.quad_n)
    res = plateau.solve(ci, curve, cfg, rings=args.rings)
    out = _out_dir(args)
    plateau.write_obj(res.mesh, out / "surface.obj")
    payload = res.to_dict()
    rows = [{k: v for k, v in r.items() if k != "interior_steps"} for r in res.eps_trace]
    _emit(args, "diagnostics", payload, config, rows)
    print(f"solve-plateau: area={res.finsler_area:.8f} converged={res.converged} "
          f"isoperimetric_ok={res.isoperimetric_ok}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_radon_verify(args):
    doc = _metric_doc(args.metric)
    metric = specfile.metric_from_dict(doc)
    if doc.get("m", 2) != 2:
        raise ConfigurationError("radon-verify supports m = 2")
    config = {"command": "radon-verify", "metric": doc, "samples": args.samples, "quad_n": args.quad_n,
              "tol": args.tol, "seed": args.seed}
    rng = np.random.default_rng(args.seed)
    x = None
    if metric.x_dependent:
        x = rng.uniform(-1.0, 1.0, metric.dim)
    g = radon.metric_power(metric, 2, x)
    Z = sampling.sphere_samples(3, args.samples, args.seed) * rng.uniform(0.5, 2.0, (args.samples, 1))
    rows, worst = [], 0.0
    for k, z in enumerate(Z):
        tau, sigma = int(rng.integers(3)), int(rng.integers(3))
        lhs, rhs = radon.diff_rule_sides(g, z, tau, sigma, args.quad_n)
        r = abs(lhs - rhs)
        worst = max(worst, r)
        rows.append({"sample": k, "tau": tau, "sigma": sigma, "lhs": lhs, "rhs": rhs, "residual": r})
    ci = CartanIntegrand(metric, 2, args.quad_n)
    A = ci.batch(Z, None if x is None else np.broadcast_to(x, Z.shape))
    R = radon.radon_batch(g, Z, args.quad_n)
    recip = float(np.max(np.abs(A * R - 1.0)))
    ok = worst <= args.tol and recip <= args.reciprocity_tol
    payload = {"max_diff_rule_residual": worst, "max_reciprocity_error": recip,
               "reciprocity_tol": args.reciprocity_tol, "passed": ok, "samples": rows}
    _emit(args, "radon_verify", payload, config, rows)
    print(f"radon-verify: {'PASS' if ok else 'FAIL'} diff-rule residual {worst:.3e}, "
          f"reciprocity {recip:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="finslerarea", description="Finsler area checks and Plateau solver.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=2000):
        sp.add_argument("--metric", help="JSON metric spec file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--quad-n", type=_positive(int), default=256, help="great-circle quadrature nodes")
        sp.add_argument("--samples", type=_positive(int), default=samples)
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("check-metric", help="Finsler and (GA) checks for a metric")
    common(sp)
    sp.add_argument("--x-samples", type=_positive(int), default=8,
                    help="base points for x-dependent metrics")
    sp.set_defaults(func=cmd_check_metric)

    sp = sub.add_parser("threshold-scan", help="critical drift length of an (alpha, beta) family")
    common(sp)
    sp.add_argument("--family", default="randers")
    sp.add_argument("--b-low", type=float, default=0.05)
    sp.add_argument("--b-high", type=float, default=0.95)
    sp.add_argument("--tol", type=_positive(float), default=0.005, help="final bracket width")
    sp.set_defaults(func=cmd_threshold_scan)

    sp = sub.add_parser("solve-plateau", help="minimise Finsler area spanning a curve")
    common(sp)
    sp.add_argument("--curve", default="circle", help="built-in name or JSON/CSV/text file")
    sp.add_argument("--rings", type=_positive(int), default=16)
    sp.add_argument("--eps-schedule", type=_schedule, default=plateau.SolveConfig().eps_schedule)
    sp.add_argument("--tol", type=_positive(float), default=1e-6)
    sp.add_argument("--max-iter", type=_positive(int), default=300)
    sp.set_defaults(func=cmd_solve_plateau)

    sp = sub.add_parser("radon-verify", help="differentiation rule and reciprocity of the Radon transform")
    common(sp, samples=100)
    sp.add_argument("--tol", type=_positive(float), default=1e-5)
    sp.add_argument("--reciprocity-tol", type=_positive(float), default=1e-12)
    sp.set_defaults(func=cmd_radon_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularIntegrandError, MeshDegenerationError, ScanInconsistentError, NotFinslerError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FinslerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
