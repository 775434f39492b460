"""Experiment orchestration: seeding, ensembles, and CSV emission.

Every row carries the full parameter tuple so outputs are self-describing,
and numeric and analytic gain reports share one schema differing only in
the `source` column.  All randomness descends from one master seed through
a fixed splitting rule (master, experiment tag, kind index, m, tau, run
index), so reruns are byte-identical.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import engine, markov, strategies as strat
from .engine import KINDS, SimConfig, run_seed
from .errors import ConfigError
from .persistence import persistence_grid

GAIN_FIELDS = ["kind", "m", "tau", "N", "S", "runs",
               "agent_gain", "agent_se", "strategy_gain", "strategy_se", "source"]
CAGENT_FIELDS = ["kind", "m", "tau", "N", "S", "n_c", "runs",
                 "c_gain", "s_gain", "c_minus_s", "c_minus_s_se"]
PERSISTENCE_FIELDS = ["kind", "m", "scale", "persistence", "stderr",
                      "tau", "N", "S", "runs", "length"]

# experiment tags mixed into child seeds
TAG_TABLE1 = 1
TAG_SWEEP = 2
TAG_CAGENT = 3
TAG_PERSISTENCE = 4
TAG_ANALYTIC = 5


@dataclass(frozen=True)
class ExperimentSpec:
    """One orchestrated experiment: base config, sweep ranges, output."""

    experiment: str
    kinds: tuple = KINDS
    m_values: tuple = (2,)
    tau: int = 1
    n_agents: int = 31
    strategies_per_agent: int = 2
    runs: int = 50
    steps: int | None = None
    warmup: int | None = None
    n_counteradaptive: int = 0
    seed: int = 0
    out: str = "out.csv"
    disorder_file: str | None = None
    scales: tuple = ()

    def __post_init__(self):
        if not self.kinds or not self.m_values:
            raise ConfigError("empty sweep range")


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(path, fieldnames, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) for k in fieldnames) + "\n")


def default_out_dir() -> str:
    return os.environ.get("THGAMES_OUT", ".")


def sweep_warmup(tau: int) -> int:
    """Warmup long enough to fill the score window and mix past it."""
    return max(400, 2 * tau)


def fixed_disorder_gains(kind: str, disorder: strat.QuenchedDisorder, tau: int,
                         runs: int, steps: int, warmup: int, seed: int,
                         ) -> tuple[float, float, float, float]:
    """Ensemble gains on one fixed disorder, fresh initial paths per run.

    Independent replicas rather than one long run: on locked-in (reducible)
    majority and dollar chains the run-to-run spread is the real
    uncertainty, and the replica mean matches the uniform-start steady
    state the analytic side computes.
    """
    agent = np.zeros(runs)
    strategy = np.zeros(runs)
    for r in range(runs):
        cfg = SimConfig(
            n_agents=disorder.n_agents, memory=disorder.m, horizon=tau,
            kind=kind, steps=steps,
            strategies_per_agent=disorder.strategies_per_agent,
            warmup=warmup, seed=run_seed(seed, r), space=disorder.space,
        )
        res = engine.run(cfg, disorder)
        agent[r] = res.agent_wealth_per_step
        strategy[r] = res.strategy_wealth_per_step
    a, a_se = engine._mean_se(agent)
    s, s_se = engine._mean_se(strategy)
    return a, a_se, s, s_se


def _gain_row(kind, m, tau, n, s, runs, ag, ag_se, sg, sg_se, source) -> dict:
    return {"kind": kind, "m": m, "tau": tau, "N": n, "S": s, "runs": runs,
            "agent_gain": ag, "agent_se": ag_se,
            "strategy_gain": sg, "strategy_se": sg_se, "source": source}


def table1_rows(seed: int = 0, disorder: strat.QuenchedDisorder | None = None,
                runs: int = 200, steps: int = 2000, warmup: int = 400,
                kinds=KINDS) -> list[dict]:
    """Numeric and analytic gains for all games on one quenched disorder.

    The config is the canonical small case: m=2, S=2, tau=1, N=31.
    """
    if disorder is None:
        disorder = strat.sample_quenched_disorder(31, 2, 2, seed=run_seed(seed, TAG_TABLE1))
    if disorder.m != 2 or disorder.strategies_per_agent != 2:
        raise ConfigError("gain table runs at m=2, S=2")
    rows = []
    for kind in kinds:
        ag, ag_se, sg, sg_se = fixed_disorder_gains(
            kind, disorder, tau=1, runs=runs, steps=steps, warmup=warmup,
            seed=run_seed(seed, TAG_TABLE1, KINDS.index(kind)))
        rows.append(_gain_row(kind, 2, 1, disorder.n_agents, 2, runs,
                              ag, ag_se, sg, sg_se, "numeric"))
    for kind in kinds:
        ag, sg = markov.analytic_gains(kind, disorder, tau=1)
        rows.append(_gain_row(kind, 2, 1, disorder.n_agents, 2, 0,
                              ag, 0.0, sg, 0.0, "analytic"))
    return rows


def sweep_rows(kinds, m_values, tau: int, runs: int, steps: int = 20_000,
               warmup: int | None = None, n_agents: int = 31,
               strategies_per_agent: int = 2, seed: int = 0) -> list[dict]:
    """Ensemble agent and strategy gains per (kind, m), fresh disorders."""
    if warmup is None:
        warmup = sweep_warmup(tau)
    rows = []
    for kind in kinds:
        for m in m_values:
            cfg = SimConfig(
                n_agents=n_agents, memory=m, horizon=tau, kind=kind,
                steps=steps, strategies_per_agent=strategies_per_agent,
                warmup=warmup,
                seed=run_seed(seed, TAG_SWEEP, KINDS.index(kind), m, tau))
            rep = engine.ensemble_gains(cfg, runs)
            rows.append(_gain_row(kind, m, tau, n_agents, strategies_per_agent,
                                  runs, rep.agent_gain, rep.agent_se,
                                  rep.strategy_gain, rep.strategy_se, "numeric"))
    return rows


def analytic_rows(kinds, m_values, tau: int, n_agents: int = 31,
                  seed: int = 0, disorder: strat.QuenchedDisorder | None = None,
                  ) -> list[dict]:
    """Closed-form gains per (kind, m); kinds share the per-m disorder."""
    rows = []
    for m in m_values:
        d = disorder if disorder is not None else strat.sample_quenched_disorder(
            n_agents, 2, m, seed=run_seed(seed, TAG_ANALYTIC, m))
        for kind in kinds:
            ag, sg = markov.analytic_gains(kind, d, tau)
            rows.append(_gain_row(kind, m, tau, n_agents, 2, 0,
                                  ag, 0.0, sg, 0.0, "analytic"))
    return rows


def cagent_rows(kinds, m_values, tau: int = 400, runs: int = 200,
                steps: int = 100, warmup: int = 400, n_counteradaptive: int = 3,
                n_agents: int = 31, strategies_per_agent: int = 2,
                seed: int = 0) -> list[dict]:
    """Counteradaptive-minus-standard mean per-step gain per (kind, m)."""
    if not 0 < n_counteradaptive < n_agents:
        raise ConfigError("counteradaptive count must leave standard agents")
    rows = []
    for kind in kinds:
        for m in m_values:
            diffs = np.zeros(runs)
            c_gain = np.zeros(runs)
            s_gain = np.zeros(runs)
            cell = run_seed(seed, TAG_CAGENT, KINDS.index(kind), m, tau)
            for r in range(runs):
                cfg = SimConfig(
                    n_agents=n_agents, memory=m, horizon=tau, kind=kind,
                    steps=steps, strategies_per_agent=strategies_per_agent,
                    warmup=warmup, n_counteradaptive=n_counteradaptive,
                    seed=run_seed(cell, r))
                gains = engine.run(cfg).per_agent_gains
                c_gain[r] = gains[:n_counteradaptive].mean()
                s_gain[r] = gains[n_counteradaptive:].mean()
                diffs[r] = c_gain[r] - s_gain[r]
            diff, diff_se = engine._mean_se(diffs)
            rows.append({"kind": kind, "m": m, "tau": tau, "N": n_agents,
                         "S": strategies_per_agent, "n_c": n_counteradaptive,
                         "runs": runs, "c_gain": float(c_gain.mean()),
                         "s_gain": float(s_gain.mean()),
                         "c_minus_s": diff, "c_minus_s_se": diff_se})
    return rows


def persistence_rows(kinds, m_values, scales, tau: int = 100, runs: int = 100,
                     length: int = 1000, n_agents: int = 31,
                     strategies_per_agent: int = 2, warmup: int = 0,
                     seed: int = 0) -> list[dict]:
    """Persistence grid cells as flat rows, one per (kind, m, scale)."""
    grids = persistence_grid(
        kinds, m_values, scales, tau=tau, runs=runs, length=length,
        n_agents=n_agents, strategies_per_agent=strategies_per_agent,
        warmup=warmup, seed=run_seed(seed, TAG_PERSISTENCE))
    rows = []
    for kind in kinds:
        means, ses = grids[kind]
        for mi, m in enumerate(m_values):
            for si, scale in enumerate(scales):
                rows.append({"kind": kind, "m": m, "scale": scale,
                             "persistence": float(means[mi, si]),
                             "stderr": float(ses[mi, si]),
                             "tau": tau, "N": n_agents,
                             "S": strategies_per_agent,
                             "runs": runs, "length": length})
    return rows
