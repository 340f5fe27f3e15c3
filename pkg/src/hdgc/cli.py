"""``hdgc`` command line: simulate, test, network, montecarlo, medrv.

Options may also come from a JSON file given with ``--config``; its keys are
the option names with dashes replaced by underscores, and explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .montecarlo import run_grid, table_csv, table_json
from .network import girvan_newman, medrv, spillover_network
from .pdslm import STATISTICS, GCTestSpec, gc_test
from .tuning import RULE_KINDS, TuningRule
from .varsim import TimeSeriesPanel, build_dgp, read_panel_csv, simulate_var, toeplitz_sigma, write_panel_csv

STAT_ALIASES = {"lmf": "lm_f", "lmchi2": "lm_chi2", "wald": "wald", "waldf": "wald_f", "het": "lm_het"}


class UsageError(Exception):
    pass


def _list(cast):
    def parse(text):
        try:
            return [cast(v) for v in str(text).split(",") if v.strip() != ""]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def _stat(name: str) -> str:
    if name in STATISTICS:
        return name
    try:
        return STAT_ALIASES[name]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown statistic {name!r}") from None


def _add_tuning(p: argparse.ArgumentParser, multi: bool = False) -> None:
    if multi:
        p.add_argument("--tune", default="bic",
                       help="comma list of aic,bic,ebic,plugin,tscv or 'all'")
    else:
        p.add_argument("--tune", default="bic", choices=RULE_KINDS)
    p.add_argument("--ebic-gamma", type=float, default=0.5)
    p.add_argument("--plugin-alpha", type=float, default=0.05)
    p.add_argument("--plugin-c", type=float, default=0.5)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--bound-fraction", type=float, default=0.5)
    p.add_argument("--no-bound", action="store_true")
    p.add_argument("--adaptive", action="store_true", help="adaptive lasso (plain-lasso pilot)")


def _rule(args, kind: str) -> TuningRule:
    return TuningRule(kind=kind, ebic_gamma=args.ebic_gamma, plugin_alpha=args.plugin_alpha,
                      plugin_c=args.plugin_c, folds=args.folds,
                      lower_bound_fraction=args.bound_fraction, enforce_bound=not args.no_bound,
                      adaptive=args.adaptive)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdgc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hdgc {__version__}")
    parser.add_argument("--config", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a DGP panel to CSV")
    p.add_argument("--dgp", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--hypothesis", choices=("null", "alternative"), default="null")
    p.add_argument("--burn-in", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("test", help="one Granger-causality test")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--cause", required=True, help="series name, or comma list for a block")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--design", choices=("var", "vhar"), default="var")
    p.add_argument("--stat", type=_stat, default="lm_f")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--gc-handling", default="exclude_then_reinsert",
                   choices=("exclude_then_reinsert", "keep_unpenalized", "keep_penalized"))
    _add_tuning(p)
    p.add_argument("--out", help="also write the JSON result here")

    p = sub.add_parser("network", help="all-pairs spillover network")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--design", choices=("var", "vhar"), default="vhar")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--stat", type=_stat, default=None)
    p.add_argument("--baseline", choices=("bivariate",), default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_tuning(p)
    p.add_argument("--out-dot")
    p.add_argument("--out-json")
    p.add_argument("--out-communities")

    p = sub.add_parser("montecarlo", help="size/power tables")
    p.add_argument("--dgp", type=_list(int), default=[1])
    p.add_argument("--k", type=_list(int), default=[10])
    p.add_argument("--t", type=_list(int), default=[100])
    p.add_argument("--rho", type=_list(float), default=[0.0])
    p.add_argument("--hypothesis", type=_list(str), default=["null"],
                   help="comma list of null,alternative")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--stat", type=_stat, default="lm_f")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--baseline", choices=("bivariate",), default=None,
                   help="add the bivariate F test as an extra method")
    p.add_argument("--burn-in", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    _add_tuning(p, multi=True)
    p.add_argument("--out", required=True, help="CSV table; JSON goes next to it")

    p = sub.add_parser("medrv", help="daily MedRV from intraday returns")
    p.add_argument("--in", dest="input", required=True,
                   help="CSV, header = series names (optional leading 'day'/'date' column)")
    p.add_argument("--m", type=int, default=None,
                   help="returns per day when there is no day column")
    p.add_argument("--log", action="store_true")
    p.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------- commands

def _load_panel(path) -> TimeSeriesPanel:
    try:
        return read_panel_csv(path)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> int:
    panel = simulate_var(build_dgp(args.dgp, args.k, args.hypothesis),
                         toeplitz_sigma(args.k, args.rho), args.t, args.burn_in, args.seed)
    write_panel_csv(panel, args.out)
    return 0


def cmd_test(args) -> int:
    panel = _load_panel(args.input)
    causes = [c for c in args.cause.split(",") if c]
    for name in [args.target, *causes]:
        if name not in panel.names:
            raise UsageError(f"unknown series {name!r}; columns are {', '.join(panel.names)}")
    if args.target in causes:
        raise UsageError("cause and target must differ")
    spec = GCTestSpec(target=args.target, cause=causes if len(causes) > 1 else causes[0],
                      lags=args.lags, design=args.design, tuning=_rule(args, args.tune),
                      statistic=args.stat, alpha=args.alpha, gc_handling=args.gc_handling)
    text = gc_test(panel, spec).to_json(indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def _suffixed(path: str, tag: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix}"))


def _write_network(net, args, tag=None) -> None:
    name = lambda path: path if tag is None else _suffixed(path, tag)  # noqa: E731
    if args.out_dot:
        Path(name(args.out_dot)).write_text(net.to_dot())
    if args.out_json:
        d = net.to_dict()
        d["communities"] = girvan_newman(net.skeleton()).assignment
        Path(name(args.out_json)).write_text(json.dumps(d, indent=2) + "\n")
    if args.out_communities:
        Path(name(args.out_communities)).write_text(girvan_newman(net.skeleton()).to_csv())
    label = tag or "pds"
    print(f"{label}: {len(net.edges)} edges, {len(net.errors)} failed tests", file=sys.stderr)
    for e in net.errors:
        print(f"  {e.source}->{e.target}: {e.error}", file=sys.stderr)


def cmd_network(args) -> int:
    panel = _load_panel(args.input)
    if panel.K < 2:
        raise UsageError("network needs at least two series")
    rule = _rule(args, args.tune)
    net = spillover_network(panel, args.design, rule, args.alpha, args.stat, args.lags,
                            workers=args.workers)
    _write_network(net, args)
    if args.baseline:
        base = spillover_network(panel, args.design, rule, args.alpha, args.stat, args.lags,
                                 baseline=args.baseline, workers=args.workers)
        _write_network(base, args, args.baseline)
    return 0


def cmd_montecarlo(args) -> int:
    kinds = list(RULE_KINDS) if args.tune == "all" else [k for k in args.tune.split(",") if k]
    for k in kinds:
        if k not in RULE_KINDS:
            raise UsageError(f"unknown tuning rule {k!r}")
    for h in args.hypothesis:
        if h not in ("null", "alternative"):
            raise UsageError(f"unknown hypothesis {h!r}")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    methods = [_rule(args, k) for k in kinds]
    if args.baseline:
        methods.append(args.baseline)
    try:
        results = run_grid(args.dgp, args.k, args.t, args.rho, args.hypothesis, args.lags,
                           methods, args.reps, args.seed, args.stat, args.alpha, args.burn_in,
                           args.workers)
    except ValueError as exc:
        raise UsageError(f"invalid grid: {exc}") from None
    text = table_csv(results)
    Path(args.out).write_text(text)
    Path(args.out).with_suffix(".json").write_text(table_json(results) + "\n")
    sys.stdout.write(text)
    return 0


def _read_intraday(path, m):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise UsageError(f"{path}: no intraday returns")
    header, body = rows[0], rows[1:]
    if header[0].strip().lower() in ("day", "date"):
        days, order = {}, []
        for r in body:
            if r[0] not in days:
                days[r[0]] = []
                order.append(r[0])
            days[r[0]].append([float(v) for v in r[1:]])
        return header[1:], [np.array(days[d]) for d in order]
    if not m:
        raise UsageError("--m is required when the file has no day column")
    data = np.array([[float(v) for v in r] for r in body])
    if data.shape[0] % m:
        raise UsageError(f"{data.shape[0]} rows is not a multiple of M={m}")
    return header, [data[i:i + m] for i in range(0, data.shape[0], m)]


def cmd_medrv(args) -> int:
    try:
        names, days = _read_intraday(args.input, args.m)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    rv = np.array([[medrv(day[:, s]) for s in range(day.shape[1])] for day in days])
    if args.log:
        if np.any(rv <= 0):
            raise UsageError("log requested but some MedRV values are zero")
        rv = np.log(rv)
    write_panel_csv(TimeSeriesPanel(rv, tuple(names)), args.out)
    return 0


COMMANDS = {"simulate": cmd_simulate, "test": cmd_test, "network": cmd_network,
            "montecarlo": cmd_montecarlo, "medrv": cmd_medrv}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config) as fh:
            config = json.load(fh)
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        for sub in subparsers.choices.values():
            for action in sub._actions:
                if action.dest in config:
                    action.default = config[action.dest]
                    action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hdgc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"hdgc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
