"""Time-horizon minority, majority, and dollar games.

Monte Carlo engine, exact path-history Markov-chain calculator for expected
agent and strategy gains, counteradaptive-agent experiments, and binary
time-series persistence analysis, plus a CSV/figure experiment harness.
"""
from .engine import (
    KINDS,
    GainReport,
    RunResult,
    SimConfig,
    SimState,
    StepRecord,
    ensemble_gains,
    init_state,
    run,
    run_seed,
    step,
)
from .errors import ConfigError, ConvergenceError
from .markov import (
    action_table,
    adjacency_matrix,
    analytic_gains,
    decided_and_undecided,
    expected_agent_gain,
    expected_strategy_gain,
    path_score_table,
    score_increment_table,
    steady_state,
    transition_matrix,
)
from .persistence import (
    PersistenceScore,
    perfectly_antipersistent_series,
    persistence,
    persistence_grid,
)
from .strategies import (
    QuenchedDisorder,
    ReducedStrategySpace,
    build_reduced_strategy_space,
    load_disorder,
    sample_quenched_disorder,
    save_disorder,
    strategy_counts,
)

__version__ = "0.1.0"
