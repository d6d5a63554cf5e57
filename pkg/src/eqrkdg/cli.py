"""Command line entry point: ``eqrkdg <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import experiments
from .config import PRESETS, ConfigError, RunConfig
from .rk import TableauParseError, builtin, certify_algebraically_stable, parse_tableau


def _load_config(args, preset: str) -> RunConfig:
    cfg = PRESETS[args.preset or preset]
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.from_text(fh.read(), base=cfg)
    updates = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        updates[k.strip().split(".")[-1]] = v.strip()
    for key in ("degree", "tau", "T", "steps", "tableau", "L", "tol", "seed", "solver"):
        v = getattr(args, key, None)
        if v is not None:
            updates[key] = str(v)
    cfg = cfg.override(updates)
    cfg.validate()
    return cfg


def _common(p: argparse.ArgumentParser, preset: str) -> None:
    p.add_argument("--config", help="configuration file (key = value with [sections])")
    p.add_argument("--preset", choices=sorted(PRESETS), help=f"base configuration (default {preset})")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any configuration key, e.g. --set pc.L=0")
    p.add_argument("--degree", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--tableau")
    p.add_argument("--L", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--solver", choices=("auto", "direct", "iterative"))
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")


def _float_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(2.0 ** float(tok[2:]) if tok.startswith("2^") else float(tok))
    return out


def cmd_accuracy_space(args) -> int:
    cfg = _load_config(args, "accuracy-space")
    if args.print_config:
        print(cfg.to_text())
        return 0
    cells = [int(x) for x in args.cells.split(",")]
    table = experiments.accuracy_space(cfg, cells)
    print(f"# k={cfg.degree} tau={cfg.tau!r} T={cfg.T!r} tableau={cfg.tableau} L={cfg.L}")
    print(table.format())
    if args.csv:
        table.to_csv(args.csv)
    return 0


def cmd_accuracy_time(args) -> int:
    cfg = _load_config(args, "accuracy-time")
    if args.print_config:
        print(cfg.to_text())
        return 0
    taus = _float_list(args.taus)
    table = experiments.accuracy_time(cfg, taus)
    print(f"# k={cfg.degree} N={cfg.cells} T={cfg.T!r} tableau={cfg.tableau} L={cfg.L}")
    print(table.format())
    if args.csv:
        table.to_csv(args.csv)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args, "rolls")
    if args.print_config:
        print(cfg.to_text())
        return 0

    def progress(state, rec):
        if args.verbose and (rec.n % max(1, args.verbose) == 0):
            print(f"n={rec.n} t={rec.t:.4g} E-C0|Omega|={rec.shifted:.10g} pc={rec.pc_iterations}",
                  file=sys.stderr)

    _, records, files = experiments.simulate(cfg, args.output, progress)
    increases = sum(1 for r in records[1:] if r.dissipation < -1e-10 * abs(r.energy))
    print(f"steps: {len(records) - 1}  final shifted energy: {records[-1].shifted:.12g}  "
          f"energy increases: {increases}  snapshots: {len(files)}")
    return 0


def cmd_check_tableau(args) -> int:
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            tab = parse_tableau(fh.read(), name=args.file)
    else:
        tab = builtin(args.name)
    rep = certify_algebraically_stable(tab)
    np.set_printoptions(precision=17, suppress=False)
    print(f"tableau: {tab.name} (s = {tab.s})")
    print(tab.to_text(), end="")
    print("M =")
    print(rep.M)
    print("eigenvalues(M) =", rep.eigenvalues)
    print(f"consistency defect: {tab.consistency_defect():.3e}")
    print(f"verdict: {'stable' if rep.stable else 'unstable'} ({rep.reason})")
    return 0 if rep.stable or not args.strict else 3


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqrkdg", description=__doc__)
    p.add_argument("-v", "--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("accuracy-space", help="spatial convergence study (manufactured solution)")
    _common(s, "accuracy-space")
    s.add_argument("--cells", default="8,16,32,64", help="comma separated N values")
    s.add_argument("--csv", help="write the table as CSV")
    s.set_defaults(func=cmd_accuracy_space)

    s = sub.add_parser("accuracy-time", help="temporal convergence study (manufactured solution)")
    _common(s, "accuracy-time")
    s.add_argument("--taus", default="2^-2,2^-3,2^-4,2^-5", help="comma separated step sizes")
    s.add_argument("--csv", help="write the table as CSV")
    s.set_defaults(func=cmd_accuracy_time)

    s = sub.add_parser("simulate", help="pattern simulation with energy CSV and snapshots")
    _common(s, "rolls")
    s.add_argument("--seed", type=int, help="seed for random initial data")
    s.add_argument("--output", "-o", default=".", help="output directory")
    s.add_argument("--verbose", type=int, default=0, metavar="K", help="report every K steps")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-tableau", help="print a Butcher tableau and its stability verdict")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("name", nargs="?", help="builtin tableau name")
    g.add_argument("--file", help="tableau text file")
    s.add_argument("--strict", action="store_true", help="exit with status 3 when unstable")
    s.set_defaults(func=cmd_check_tableau)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TableauParseError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
