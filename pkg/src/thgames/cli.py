"""Command-line interface.

Subcommands map to the experiment harness: `table1` (single-disorder
numeric vs analytic gain table), `sweep` (gain ensembles over m), `cagents`
(counteradaptive-agent comparison), `persistence` (grid over m and scale),
and `analytic` (closed-form gains only).  Reports are CSV; matplotlib
figures are rendered next to the CSV unless --no-plot is given.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import harness, plotting, strategies as strat
from .engine import KINDS
from .errors import ConfigError


def parse_range(text: str) -> tuple[int, ...]:
    """Accept '4', '2..12', or '2,3,5'."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = tuple(range(int(lo), int(hi) + 1))
    elif "," in text:
        values = tuple(int(p) for p in text.split(",") if p)
    else:
        values = (int(text),)
    if not values:
        raise ConfigError(f"empty range {text!r}")
    return values


def parse_kinds(text: str) -> tuple[str, ...]:
    if text == "all":
        return KINDS
    kinds = tuple(k.strip() for k in text.split(",") if k.strip())
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"unknown game kind {k!r}; choose from {', '.join(KINDS)}")
    return kinds


def _out_path(args, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(harness.default_out_dir(), default_name)


def _add_common(p, tau_default: int):
    p.add_argument("--kind", default="all",
                   help="game kind(s): minority, majority, dollar, comma list, or all")
    p.add_argument("--tau", type=int, default=tau_default, help="score window length")
    p.add_argument("--N", type=int, default=31, dest="n_agents", help="agent count")
    p.add_argument("--S", type=int, default=2, dest="n_strategies",
                   help="strategies per agent")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip rendering PNG figures next to the CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thgames",
        description="Time-horizon minority/majority/dollar game experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="numeric vs analytic gain table on one "
                       "fixed quenched disorder (m=2, S=2, tau=1)")
    _add_common(p, tau_default=1)
    p.add_argument("--disorder-file", default=None,
                   help="replay a saved strategy-assignment tensor")
    p.add_argument("--runs", type=int, default=200, help="numeric replicas")
    p.add_argument("--steps", type=int, default=2000, help="measured steps per replica")
    p.add_argument("--warmup", type=int, default=400, help="discarded steps per replica")

    p = sub.add_parser("sweep", help="ensemble agent vs strategy gains over m")
    _add_common(p, tau_default=1)
    p.add_argument("--m", default="2..12", help="memory range, e.g. 2..12")
    p.add_argument("--runs", type=int, default=50, help="ensemble size per point")
    p.add_argument("--steps", type=int, default=20_000, help="measured steps per run")
    p.add_argument("--warmup", type=int, default=None,
                   help="discarded steps (default max(400, 2*tau))")

    p = sub.add_parser("cagents", help="counteradaptive vs standard agent gains")
    _add_common(p, tau_default=400)
    p.add_argument("--m", default="2..14", help="memory range")
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--steps", type=int, default=100, help="measured steps per run")
    p.add_argument("--warmup", type=int, default=400)
    p.add_argument("--n-c-agents", type=int, default=3, dest="n_c",
                   help="how many agents play their worst strategy")

    p = sub.add_parser("persistence", help="persistence grid over m and scale")
    _add_common(p, tau_default=100)
    p.add_argument("--m", default="2..10", help="memory range")
    p.add_argument("--scale-range", default="2..10", dest="scales",
                   help="analysis scale range")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--steps", type=int, default=1000, dest="length",
                   help="bit-series length per run")
    p.add_argument("--warmup", type=int, default=0,
                   help="discarded steps; 0 scores the series from a fresh game")

    p = sub.add_parser("analytic", help="closed-form gains per (kind, m)")
    _add_common(p, tau_default=1)
    p.add_argument("--m", default="2", help="memory range")
    p.add_argument("--disorder-file", default=None,
                   help="use a saved tensor instead of sampling per m")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        kinds = parse_kinds(args.kind)
        if args.command == "table1":
            disorder = None
            if args.disorder_file:
                disorder = strat.load_disorder(args.disorder_file)
            rows = harness.table1_rows(seed=args.seed, disorder=disorder,
                                       runs=args.runs, steps=args.steps,
                                       warmup=args.warmup, kinds=kinds)
            out = _out_path(args, "table1.csv")
            harness.write_csv(out, harness.GAIN_FIELDS, rows)
            if not args.no_plot:
                plotting.plot_gain_table(rows, os.path.splitext(out)[0] + ".png")
        elif args.command == "sweep":
            rows = harness.sweep_rows(
                kinds, parse_range(args.m), tau=args.tau, runs=args.runs,
                steps=args.steps, warmup=args.warmup, n_agents=args.n_agents,
                strategies_per_agent=args.n_strategies, seed=args.seed)
            out = _out_path(args, f"sweep_tau{args.tau}.csv")
            harness.write_csv(out, harness.GAIN_FIELDS, rows)
            if not args.no_plot:
                plotting.plot_gain_sweep(rows, os.path.splitext(out)[0] + ".png")
        elif args.command == "cagents":
            rows = harness.cagent_rows(
                kinds, parse_range(args.m), tau=args.tau, runs=args.runs,
                steps=args.steps, warmup=args.warmup,
                n_counteradaptive=args.n_c, n_agents=args.n_agents,
                strategies_per_agent=args.n_strategies, seed=args.seed)
            out = _out_path(args, "cagents.csv")
            harness.write_csv(out, harness.CAGENT_FIELDS, rows)
            if not args.no_plot:
                plotting.plot_cagents(rows, os.path.splitext(out)[0] + ".png")
        elif args.command == "persistence":
            rows = harness.persistence_rows(
                kinds, parse_range(args.m), parse_range(args.scales),
                tau=args.tau, runs=args.runs, length=args.length,
                n_agents=args.n_agents, warmup=args.warmup,
                strategies_per_agent=args.n_strategies, seed=args.seed)
            out = _out_path(args, "persistence.csv")
            harness.write_csv(out, harness.PERSISTENCE_FIELDS, rows)
            if not args.no_plot:
                plotting.plot_persistence(rows, os.path.splitext(out)[0])
        elif args.command == "analytic":
            disorder = None
            if args.disorder_file:
                disorder = strat.load_disorder(args.disorder_file)
            rows = harness.analytic_rows(
                kinds, parse_range(args.m), tau=args.tau,
                n_agents=args.n_agents, seed=args.seed, disorder=disorder)
            out = _out_path(args, "analytic.csv")
            harness.write_csv(out, harness.GAIN_FIELDS, rows)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
