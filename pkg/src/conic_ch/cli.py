"""Command-line entry point.

    conic-ch indicial --n 1 --alpha 1 --gamma -0.5
    conic-ch simulate --config run.cfg --t_end 2
    conic-ch verify
    conic-ch fit-asymptotics --config run.cfg

Exit codes: 0 success, 1 invalid input, 2 runtime failure (including a failed
oracle check), 64 unknown subcommand.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import indicial
from .config import KEYS, ConfigError, RunConfig, parse_config
from .discrete import Discretization, OperatorError, build_grid
from .dynamics import SimulationError, run
from .geometry import GeometryError, circle_spectrum, sphere_spectrum
from .verification import OracleError, run_oracle_suite

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 64
SUBCOMMANDS = ("indicial", "simulate", "verify", "fit-asymptotics")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat 'key = value' file")
    for key in KEYS:
        names = [f"--{key}"]
        alt = "--" + key.replace(".", "-")
        if alt != names[0]:
            names.append(alt)
        p.add_argument(*names, dest=key, default=None, metavar="VALUE")


def _load(args) -> RunConfig:
    return parse_config(args.config, {k: getattr(args, k) for k in KEYS})


def _discretization(cfg: RunConfig) -> Discretization:
    g = cfg.geometry()
    return Discretization(g, build_grid(g, cfg.n_radial, cfg.x_min, cfg.grading), cfg.n_theta)


def _echo_config(cfg: RunConfig, out: Path):
    (out / "config.resolved").write_text(cfg.to_text())


def cmd_indicial(args) -> int:
    if args.alpha is not None and args.n != 1:
        raise ConfigError(["--alpha only applies to n = 1 (circle cross-section)"])
    if args.n < 1:
        raise ConfigError([f"n must be >= 1, got {args.n}"])
    if args.alpha is not None and not args.alpha > 0:
        raise ConfigError([f"alpha must be > 0, got {args.alpha}"])
    if args.k_max is not None:
        spec = (circle_spectrum(args.alpha or 1.0, args.k_max) if args.n == 1
                else sphere_spectrum(args.n, args.k_max))
    else:
        spec = indicial.covering_spectrum(args.n, args.gamma, args.alpha)
    rep = indicial.report(args.n, spec, args.gamma)
    json.dump(rep.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snaps = out / "snapshots"
    solver = cfg.solver()
    if solver.snapshot_every:
        snaps.mkdir(exist_ok=True)
    _echo_config(cfg, out)
    res = run(_discretization(cfg), solver, out_dir=snaps if solver.snapshot_every else None)
    res.series.write_csv(out / "series.csv")
    if solver.fit_modes:
        res.series.write_fits_csv(out / "tip_fits.csv")
    print(f"wrote {out / 'series.csv'} ({len(res.series.times)} rows, "
          f"{len(res.snapshots)} snapshots)", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load(args)
    solver = cfg.solver()
    if not solver.fit_modes:
        raise ConfigError(["fit_modes is empty"])
    from dataclasses import replace
    res = run(_discretization(cfg), replace(solver, norm_requests=(), snapshot_every=0))
    import csv
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", "m", "rho_hat", "r2"])
    for f in res.series.tip_fits:
        w.writerow([repr(f.t), f.m, repr(f.rho_hat), repr(f.r2)])
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    checks = run_oracle_suite(cfg.alpha0, cfg.alphaL, cfg.length, cfg.collar_width,
                              n_radial=args.oracle_n_radial, n_theta=args.oracle_n_theta,
                              x_min=cfg.x_min, grading=cfg.grading)
    ok = all(c.passed for c in checks)
    json.dump({"passed": ok, "checks": [c.to_dict() for c in checks]}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conic-ch",
                                 description="Cahn-Hilliard on spindle surfaces with conical tips")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indicial", help="indicial roots, weight window and asymptotics (JSON)")
    p.add_argument("--n", type=int, default=1, help="cross-section dimension")
    p.add_argument("--alpha", type=float, default=None, help="cone parameter (n = 1)")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--k-max", type=int, default=None,
                   help="spectrum truncation (default: just enough for the strip)")
    p.set_defaults(func=cmd_indicial)

    p = sub.add_parser("simulate", help="run and write series.csv + snapshots to out_dir")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="oracle suite (JSON pass/fail)")
    _add_config_flags(p)
    p.add_argument("--oracle-n-radial", type=int, default=24)
    p.add_argument("--oracle-n-theta", type=int, default=8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit-asymptotics", help="run and print tip exponent fits (CSV)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help"):
        build_parser().print_usage(sys.stderr)
        print(f"unknown subcommand; expected one of {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (GeometryError, indicial.IndicialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, OperatorError, OracleError, FloatingPointError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
