"""Command-line interface.

Exit codes: 0 success, 1 domain error (degenerate data, perfect fit,
solver failure, failed certificate), 2 bad input or I/O failure. Errors are
written to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .density import LogConcaveDensity
from .distances import bounded_lipschitz_upper, kolmogorov_smirnov, mallows_d1
from .errors import DomainError, LogcaveError
from .fileio import (InputError, dumps, read_distribution, read_table, sha256_file,
                     write_csv, write_json)
from .project import FitOptions, FitTrace, certify, fit
from .regress import DEOptions, fit_isotonic, fit_linear, quantile_curve
from .simulate import SCENARIOS, SimConfig, run

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


class _Run:
    """Collects what goes into the manifest written next to an output."""

    def __init__(self, argv, seed=None):
        self.argv = list(argv)
        self.seed = seed
        self.inputs = {}
        self.t0 = time.perf_counter()
        self.started = datetime.now(timezone.utc).isoformat()

    def add_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    def manifest(self, outputs):
        return {
            "argv": self.argv,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": [str(o) for o in outputs],
            "version": __version__,
            "started_at": self.started,
            "timings": {"wall_seconds": time.perf_counter() - self.t0},
        }

    def finish(self, primary, outputs):
        write_json(f"{primary}.manifest.json", self.manifest(outputs))


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def _load_density(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from exc
    if isinstance(data, dict) and "psi" in data:
        data = data["psi"]
    try:
        return LogConcaveDensity.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: expected an object with knots and logvals") from exc


def cmd_project(args, run_):
    run_.add_input(args.input)
    q = read_distribution(args.input, args.header)
    tr = FitTrace()
    psi = fit(q, FitOptions(certificate_tol=args.tol), trace=tr)
    write_json(args.out, psi.to_dict())
    outputs = [args.out]
    if args.certificate:
        write_json(args.certificate, tr.certificate.to_dict())
        outputs.append(args.certificate)
    run_.finish(args.out, outputs)
    return EXIT_OK


def cmd_certify(args, run_):
    run_.add_input(args.psi)
    run_.add_input(args.data)
    psi = _load_density(args.psi)
    q = read_distribution(args.data, args.header)
    cert = certify(psi, q, tol=args.tol)
    text = dumps(cert.to_dict())
    if args.out:
        write_json(args.out, cert.to_dict())
        run_.finish(args.out, [args.out])
    else:
        sys.stdout.write(text)
    return EXIT_OK if cert.passed else EXIT_DOMAIN


def cmd_regress(args, run_):
    run_.add_input(args.input)
    t = read_table(args.input, args.header, 2, 2)
    x, y = t[:, 0], t[:, 1]
    betas = _floats(args.quantiles) if args.quantiles else []
    for b in betas:
        if not 0 < b < 1:
            raise InputError(f"quantile level {b} outside (0, 1)")
    if args.model == "linear":
        if args.design:
            run_.add_input(args.design)
            D = read_table(args.design, args.header)
            if D.shape[0] != x.size:
                raise InputError("design and data have different row counts")
            if not np.all(D[:, 0] == 1.0):
                D = np.column_stack([np.ones(x.size), D])
        else:
            D = np.column_stack([np.ones(x.size), x])
        res = fit_linear(D, y, DEOptions(seed=args.seed))
    else:
        if args.design:
            raise InputError("--design applies to the linear model only")
        res = fit_isotonic(x, y)
    out = res.to_dict()
    out["model"] = args.model
    out["quantiles"] = {repr(b): float(res.psi.quantile(b)) for b in betas}
    write_json(args.out, out)
    outputs = [args.out]
    if args.curves:
        order = np.argsort(x, kind="stable")
        cols = [x[order], res.mu_values[order]]
        cols += [quantile_curve(res, b)[order] for b in betas]
        write_csv(args.curves, ["x", "mu_hat"] + [f"q_{b:g}" for b in betas], cols)
        outputs.append(args.curves)
    run_.finish(args.out, outputs)
    return EXIT_OK


def cmd_distance(args, run_):
    run_.add_input(args.a)
    run_.add_input(args.b)
    qa = read_distribution(args.a, args.header)
    qb = read_distribution(args.b, args.header)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = set(metrics) - {"d1", "ks", "bl"}
    if unknown:
        raise InputError(f"unknown metrics: {sorted(unknown)}")
    report = {"d1": None, "dks": None, "dbl_upper": None, "r_used": None,
              "dbl_upper_loose": None}
    if "d1" in metrics:
        report["d1"] = mallows_d1(qa, qb)
    if "ks" in metrics or "bl" in metrics:
        report["dks"] = kolmogorov_smirnov(qa, qb)
    if "bl" in metrics:
        r = args.r if args.r == "auto" else float(args.r)
        bound, r_used = bounded_lipschitz_upper(qa, qb, r)
        report.update(dbl_upper=bound, r_used=r_used, dbl_upper_loose=bound > 2.0)
    if args.out:
        write_json(args.out, report)
        run_.finish(args.out, [args.out])
    else:
        sys.stdout.write(dumps(report))
    return EXIT_OK


def cmd_simulate(args, run_):
    sizes = tuple(int(s) for s in _floats(args.sizes)) if args.sizes else None
    cfg = SimConfig(args.scenario, n=args.n, reps=args.reps, shape_r=args.shape,
                    seed=args.seed, sizes=sizes)
    report = run(cfg, threads=args.threads)
    write_json(args.out, report.to_dict())
    run_.finish(args.out, [args.out])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logcave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"logcave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def header_flag(sp):
        sp.add_argument("--header", choices=("auto", "yes", "no"), default="auto",
                        help="whether CSV inputs start with a header row")

    sp = sub.add_parser("project", help="log-concave projection of a sample")
    sp.add_argument("--input", required=True, help="CSV with value[,weight]")
    sp.add_argument("--out", required=True)
    sp.add_argument("--certificate", help="also write the optimality certificate here")
    sp.add_argument("--tol", type=float, default=1e-6)
    header_flag(sp)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("certify", help="check optimality of a fitted density")
    sp.add_argument("--psi", required=True, help="density JSON")
    sp.add_argument("--data", required=True, help="CSV with value[,weight]")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out")
    header_flag(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("regress", help="regression with log-concave errors")
    sp.add_argument("--input", required=True, help="CSV with x,y")
    sp.add_argument("--model", choices=("linear", "isotonic"), required=True)
    sp.add_argument("--design", help="CSV of basis columns for the linear model")
    sp.add_argument("--quantiles", default="", help="comma-separated levels in (0, 1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--curves")
    header_flag(sp)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("distance", help="distances between two samples")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--metrics", default="d1,ks,bl")
    sp.add_argument("--r", default="auto", help="radius for the bounded Lipschitz bound")
    sp.add_argument("--out")
    header_flag(sp)
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("simulate", help="Monte Carlo experiments")
    sp.add_argument("--scenario", choices=SCENARIOS, required=True)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--shape", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sizes", default="", help="comma-separated sample sizes")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker processes (default: LOGCAVE_THREADS or 1)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)
    return p


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    run_ = _Run(argv, getattr(args, "seed", None))
    try:
        return args.func(args, run_)
    except DomainError as exc:
        return _error(type(exc).__name__, str(exc), EXIT_DOMAIN)
    except (LogcaveError, ValueError, OSError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
