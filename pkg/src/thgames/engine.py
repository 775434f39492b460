"""Monte Carlo engine for the time-horizon minority, majority, and dollar games.

Each step: agents play the action prescribed by their best-scoring strategy
(worst-scoring for counteradaptive agents), the aggregate vote A(t) fixes
the winning bit, and every strategy of every agent receives the virtual
payoff it would have earned.  Virtual payoffs live in rolling windows of
length tau.  Payoffs are the sign form: a winning vote scores +1, a losing
vote -1; the dollar game settles the previous step's action against the
current aggregate.

Virtual scores are intrinsic to a strategy table, not to the agent holding
it, so windows are kept once per distinct held strategy.  The hot loop is
compiled with numba; the pure-python `step` walks the identical state and
random stream one step at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from . import strategies as strat
from .errors import ConfigError

KINDS = ("minority", "majority", "dollar")
_KIND_CODE = {"minority": 0, "majority": 1, "dollar": 2}


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one simulation run."""

    n_agents: int
    memory: int
    horizon: int
    kind: str
    steps: int
    strategies_per_agent: int = 2
    warmup: int = 400
    n_counteradaptive: int = 0
    seed: int = 0
    space: str = "reduced"
    history_bit_flip: bool = False
    # start score windows consistent with the random initial path; turn off
    # to start from empty windows (all agents tied on the first step)
    prefill_scores: bool = True
    # payoff +-a_i * A instead of the +-1 sign form
    linear_payoff: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("need at least one agent")
        if self.steps < 1:
            raise ConfigError("need at least one measured step")
        if self.horizon < 1:
            raise ConfigError("score horizon must be at least 1")
        if self.warmup < 0:
            raise ConfigError("warmup cannot be negative")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown game kind {self.kind!r}")
        if not 0 <= self.n_counteradaptive <= self.n_agents:
            raise ConfigError("counteradaptive count must be within the agent count")
        if not 1 <= self.memory <= strat.MAX_MEMORY:
            raise ConfigError(f"memory outside supported range 1..{strat.MAX_MEMORY}")


@dataclass
class StepRecord:
    """Outcome of a single settled step."""

    aggregate: int                 # A(t), parity of N
    winning_bit: int               # 1 iff A > 0, before any history flip
    per_agent_payoff: np.ndarray   # (N,)
    n_undecided: int               # agents whose action came from a coin toss


@dataclass
class RunResult:
    """Measured-window statistics of one run."""

    bit_series: np.ndarray           # (steps,) winning bits
    aggregate_series: np.ndarray     # (steps,) A(t)
    agent_wealth_per_step: float     # mean payoff per agent per step
    strategy_wealth_per_step: float  # multiplicity-weighted virtual mean
    volatility: float                # Var[A] / N
    per_agent_gains: np.ndarray      # (N,) per-step means, construction order


@dataclass
class SimState:
    """Mutable engine state; exclusively owned by one worker."""

    config: SimConfig
    disorder: strat.QuenchedDisorder
    agent_strategies: np.ndarray   # (N, S) compact indices into act
    counteradaptive: np.ndarray    # (N,) uint8
    act: np.ndarray                # (H, 2^m) int8, held strategies only
    held: np.ndarray               # (H,) original strategy indices
    counts: np.ndarray             # (H,) agent-slot multiplicity
    path: int                      # last m+tau+1 recorded bits, newest = LSB
    windows: np.ndarray            # (H, tau) virtual increments, oldest first
    window_sums: np.ndarray        # (H,)
    window_pos: int
    prev_strategy_action: np.ndarray  # (H,)
    prev_agent_action: np.ndarray     # (N,)
    step_index: int
    rng: np.random.RandomState
    kernel_seed: int


def _derive_seeds(seed: int) -> tuple[int, int, int]:
    ss = np.random.SeedSequence(seed)
    d, p, k = (int(v) for v in ss.generate_state(3, dtype=np.uint32))
    return d, p, k


def run_seed(master: int, *parts: int) -> int:
    """Mix a master seed with experiment coordinates into a child seed."""
    ss = np.random.SeedSequence([int(master), *[int(p) & 0xFFFFFFFF for p in parts]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def prefill_windows(kind: str, act: np.ndarray, m: int, tau: int, path: int,
                    flip: bool = False) -> np.ndarray:
    """Score windows implied by a path of m+tau+1 recorded bits.

    Column 0 is the oldest entry.  The dollar lag reads the decision history
    two shifts back, which is why one bit beyond m+tau is needed.
    """
    hm = (1 << m) - 1
    win = np.zeros((act.shape[0], tau), dtype=np.int64)
    for i in range(tau):
        sig = 2 * (((path >> i) & 1) ^ int(flip)) - 1
        if kind == "dollar":
            hist = (path >> (i + 2)) & hm
            d = act[:, hist].astype(np.int64) * sig
        else:
            hist = (path >> (i + 1)) & hm
            sign = -1 if kind == "minority" else 1
            d = sign * act[:, hist].astype(np.int64) * sig
        win[:, tau - 1 - i] = d
    return win


def init_state(config: SimConfig, disorder: strat.QuenchedDisorder | None = None) -> SimState:
    """Instantiate agents from a disorder tensor (sampled fresh if omitted).

    The first n_counteradaptive agents in tuple-expansion order run in
    counteradaptive mode.  The initial path is drawn uniformly.
    """
    d_seed, p_seed, k_seed = _derive_seeds(config.seed)
    if disorder is None:
        disorder = strat.sample_quenched_disorder(
            config.n_agents, config.strategies_per_agent, config.memory,
            space=config.space, seed=d_seed,
        )
    if (disorder.n_agents != config.n_agents
            or disorder.m != config.memory
            or disorder.strategies_per_agent != config.strategies_per_agent
            or disorder.space != config.space):
        raise ConfigError("disorder does not match the simulation config")

    agents_raw = disorder.expand_agents()
    held, compact = np.unique(agents_raw, return_inverse=True)
    agent_strategies = compact.reshape(agents_raw.shape).astype(np.int64)
    act = strat.strategy_rows(config.memory, held, config.space)
    counts = np.bincount(agent_strategies.ravel(), minlength=len(held)).astype(np.int64)

    m, tau = config.memory, config.horizon
    path_rng = np.random.default_rng(p_seed)
    path = 0
    for b in path_rng.integers(0, 2, size=m + tau + 1):
        path = (path << 1) | int(b)

    if config.prefill_scores:
        windows = prefill_windows(config.kind, act, m, tau, path, config.history_bit_flip)
        hist_prev = (path >> 1) & ((1 << m) - 1)
        prev_strategy_action = act[:, hist_prev].astype(np.int64)
    else:
        windows = np.zeros((len(held), tau), dtype=np.int64)
        prev_strategy_action = np.zeros(len(held), dtype=np.int64)

    modes = np.zeros(config.n_agents, dtype=np.uint8)
    modes[: config.n_counteradaptive] = 1

    return SimState(
        config=config,
        disorder=disorder,
        agent_strategies=agent_strategies,
        counteradaptive=modes,
        act=act,
        held=held,
        counts=counts,
        path=path,
        windows=windows,
        window_sums=windows.sum(axis=1),
        window_pos=0,
        prev_strategy_action=prev_strategy_action,
        prev_agent_action=np.zeros(config.n_agents, dtype=np.int64),
        step_index=0,
        rng=np.random.RandomState(k_seed),
        kernel_seed=k_seed,
    )


def step(state: SimState) -> StepRecord:
    """Advance the state by one step; pure state transition plus coin tosses.

    Mirrors the compiled kernel exactly, including the order in which the
    random stream is consumed (tied agents in index order, then the zero-
    aggregate coin for even N).
    """
    cfg = state.config
    m, tau = cfg.memory, cfg.horizon
    hm = (1 << m) - 1
    h = state.path & hm
    cur = state.act[:, h].astype(np.int64)
    n = cfg.n_agents

    actions = np.zeros(n, dtype=np.int64)
    n_undecided = 0
    for i in range(n):
        idx = state.agent_strategies[i]
        scores = state.window_sums[idx]
        best = scores.min() if state.counteradaptive[i] else scores.max()
        n_plus = n_minus = 0
        for j in idx[scores == best]:
            if cur[j] > 0:
                n_plus += 1
            else:
                n_minus += 1
        if n_plus == 0:
            actions[i] = -1
        elif n_minus == 0:
            actions[i] = 1
        else:
            n_undecided += 1
            u = state.rng.random_sample()
            actions[i] = 1 if u * (n_plus + n_minus) < n_plus else -1

    aggregate = int(actions.sum())
    if aggregate > 0:
        sig, bit = 1, 1
    elif aggregate < 0:
        sig, bit = -1, 0
    else:
        sig = 0
        bit = 1 if state.rng.random_sample() < 0.5 else 0

    factor = aggregate if cfg.linear_payoff else sig
    if cfg.kind == "minority":
        payoff = -actions * factor
        incr = -cur * factor
    elif cfg.kind == "majority":
        payoff = actions * factor
        incr = cur * factor
    else:
        payoff = state.prev_agent_action * factor
        incr = state.prev_strategy_action * factor

    state.window_sums += incr - state.windows[:, state.window_pos]
    state.windows[:, state.window_pos] = incr
    state.window_pos = (state.window_pos + 1) % tau
    state.prev_strategy_action = cur
    state.prev_agent_action = actions
    recorded = bit ^ int(cfg.history_bit_flip)
    state.path = ((state.path << 1) | recorded) & ((1 << (m + tau + 1)) - 1)
    state.step_index += 1
    return StepRecord(aggregate=aggregate, winning_bit=bit,
                      per_agent_payoff=payoff, n_undecided=n_undecided)


@njit(cache=True)
def _run_kernel(agent_strategies, counteradaptive, act, kind, tau, m, hist0,
                windows, prev_strategy_action, steps, warmup, seed, flip, linear):
    np.random.seed(seed)
    n = agent_strategies.shape[0]
    n_slots = agent_strategies.shape[1]
    n_held = act.shape[0]
    hm = (1 << m) - 1
    hist = hist0
    win = windows.copy()
    wsum = np.zeros(n_held, dtype=np.int64)
    for j in range(n_held):
        s = 0
        for t in range(tau):
            s += win[j, t]
        wsum[j] = s
    pos = 0
    aprev_strat = prev_strategy_action.copy()
    aprev_agent = np.zeros(n, dtype=np.int64)
    cur = np.zeros(n_held, dtype=np.int64)
    actions = np.zeros(n, dtype=np.int64)

    bits = np.zeros(steps, dtype=np.int8)
    aggs = np.zeros(steps, dtype=np.int32)
    nund = np.zeros(steps, dtype=np.int32)
    agent_sum = np.zeros(n, dtype=np.int64)
    strat_sum = np.zeros(n_held, dtype=np.int64)

    for t in range(warmup + steps):
        h = hist & hm
        for j in range(n_held):
            cur[j] = act[j, h]

        aggregate = 0
        undecided = 0
        for i in range(n):
            best = wsum[agent_strategies[i, 0]]
            if counteradaptive[i]:
                for s in range(1, n_slots):
                    v = wsum[agent_strategies[i, s]]
                    if v < best:
                        best = v
            else:
                for s in range(1, n_slots):
                    v = wsum[agent_strategies[i, s]]
                    if v > best:
                        best = v
            n_plus = 0
            n_minus = 0
            for s in range(n_slots):
                j = agent_strategies[i, s]
                if wsum[j] == best:
                    if cur[j] > 0:
                        n_plus += 1
                    else:
                        n_minus += 1
            if n_plus == 0:
                a = -1
            elif n_minus == 0:
                a = 1
            else:
                undecided += 1
                a = 1 if np.random.random() * (n_plus + n_minus) < n_plus else -1
            actions[i] = a
            aggregate += a

        if aggregate > 0:
            sig = 1
            bit = 1
        elif aggregate < 0:
            sig = -1
            bit = 0
        else:
            sig = 0
            bit = 1 if np.random.random() < 0.5 else 0

        factor = aggregate if linear else sig
        measured = t >= warmup
        if measured:
            k = t - warmup
            bits[k] = bit
            aggs[k] = aggregate
            nund[k] = undecided

        for j in range(n_held):
            if kind == 0:
                d = -cur[j] * factor
            elif kind == 1:
                d = cur[j] * factor
            else:
                d = aprev_strat[j] * factor
            wsum[j] += d - win[j, pos]
            win[j, pos] = d
            if measured:
                strat_sum[j] += d
            aprev_strat[j] = cur[j]
        pos = (pos + 1) % tau

        if measured:
            for i in range(n):
                if kind == 0:
                    agent_sum[i] += -actions[i] * factor
                elif kind == 1:
                    agent_sum[i] += actions[i] * factor
                else:
                    agent_sum[i] += aprev_agent[i] * factor
        for i in range(n):
            aprev_agent[i] = actions[i]

        hist = ((hist << 1) | (bit ^ flip)) & hm

    return bits, aggs, nund, agent_sum, strat_sum


def run(config: SimConfig, disorder: strat.QuenchedDisorder | None = None) -> RunResult:
    """Execute warmup plus measured steps; statistics cover the measured window only."""
    state = init_state(config, disorder)
    hist0 = state.path & ((1 << config.memory) - 1)
    bits, aggs, _, agent_sum, strat_sum = _run_kernel(
        state.agent_strategies, state.counteradaptive, state.act,
        _KIND_CODE[config.kind], config.horizon, config.memory, hist0,
        state.windows, state.prev_strategy_action,
        config.steps, config.warmup, state.kernel_seed,
        int(config.history_bit_flip), int(config.linear_payoff),
    )
    n, s = config.n_agents, config.strategies_per_agent
    per_agent = agent_sum / config.steps
    return RunResult(
        bit_series=bits,
        aggregate_series=aggs,
        agent_wealth_per_step=float(agent_sum.sum()) / (n * config.steps),
        strategy_wealth_per_step=float(state.counts @ strat_sum) / (s * n * config.steps),
        volatility=float(np.var(aggs)) / n,
        per_agent_gains=per_agent,
    )


@dataclass(frozen=True)
class GainReport:
    """Ensemble mean and standard error of per-step gains."""

    kind: str
    memory: int
    horizon: int
    n_agents: int
    strategies_per_agent: int
    runs: int
    agent_gain: float
    agent_se: float
    strategy_gain: float
    strategy_se: float


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if len(values) < 2:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def ensemble_gains(config: SimConfig, runs: int) -> GainReport:
    """Independent seeded runs, fresh quenched disorder each."""
    if runs < 1:
        raise ConfigError("need at least one run")
    agent = np.zeros(runs)
    strategy = np.zeros(runs)
    for r in range(runs):
        res = run(replace(config, seed=run_seed(config.seed, r)))
        agent[r] = res.agent_wealth_per_step
        strategy[r] = res.strategy_wealth_per_step
    a, a_se = _mean_se(agent)
    s, s_se = _mean_se(strategy)
    return GainReport(
        kind=config.kind, memory=config.memory, horizon=config.horizon,
        n_agents=config.n_agents, strategies_per_agent=config.strategies_per_agent,
        runs=runs, agent_gain=a, agent_se=a_se, strategy_gain=s, strategy_se=s_se,
    )


def save_run_csv(result: RunResult, path) -> None:
    """Per-step dump: step,A,bit."""
    with open(path, "w") as fh:
        fh.write("step,A,bit\n")
        for t, (a, b) in enumerate(zip(result.aggregate_series, result.bit_series)):
            fh.write(f"{t},{int(a)},{int(b)}\n")
