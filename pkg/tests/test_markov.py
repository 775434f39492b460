import numpy as np
import pytest

from thgames import engine, markov, strategies as strat
from thgames.engine import SimConfig
from thgames.errors import ConfigError

from test_strategies import GOLDEN_M2, fixture_disorder

# allowed path transitions for 3-bit states, entry [new, old], 0-based
GOLDEN_ADJACENCY = np.array([
    [1, 0, 0, 0, 1, 0, 0, 0],
    [1, 0, 0, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 0, 0, 1],
    [0, 0, 0, 1, 0, 0, 0, 1],
], dtype=np.int8)


def path_bits(code, n_bits):
    """Oldest-first bit list of a path code (newest bit is the LSB)."""
    return [(code >> (n_bits - 1 - i)) & 1 for i in range(n_bits)]


def replay_strategy_score(kind, table, k, code, m, tau):
    """Score of strategy k over the window encoded in a path, by explicit replay."""
    n_bits = m + tau + (1 if kind == "dollar" else 0)
    bits = path_bits(code, n_bits)
    total = 0
    for step in range(tau):
        # outcome of the step that appended bits[-1 - step]
        outcome = 2 * bits[len(bits) - 1 - step] - 1
        lag = 2 if kind == "dollar" else 1
        hist = bits[len(bits) - step - lag - m : len(bits) - step - lag]
        h = int("".join(map(str, hist)), 2)
        a = int(table[k, h])
        total += {"minority": -a, "majority": a, "dollar": a}[kind] * outcome
    return total


def test_adjacency_matches_golden():
    assert np.array_equal(markov.adjacency_matrix(3), GOLDEN_ADJACENCY)


def test_action_table_is_the_reduced_space():
    assert np.array_equal(markov.action_table(2), GOLDEN_M2)


def test_minority_increment_for_self_transition_of_history_zero():
    inc = markov.score_increment_table("minority", 2)
    vec = inc.for_transition(new_hist=0, old_hist=0)
    assert vec.tolist() == [-1, -1, -1, -1, 1, 1, 1, 1]


def test_minority_majority_increments_are_negations():
    for m in (1, 2, 3, 4):
        mi = markov.score_increment_table("minority", m)
        ma = markov.score_increment_table("majority", m)
        assert np.array_equal(mi.table, -ma.table)


def test_increment_rejects_unreachable_transition():
    inc = markov.score_increment_table("minority", 2)
    with pytest.raises(ConfigError):
        inc.for_transition(new_hist=3, old_hist=0)


def test_dollar_increment_ignores_current_history():
    # the settled action was fixed one step before the current history
    # formed, so the table cannot depend on the middle (current) bits
    for m in (1, 2, 3):
        inc = markov.score_increment_table("dollar", m)
        assert inc.state_bits == m + 2
        n = 1 << inc.state_bits
        for code in range(n):
            twin = code ^ 2  # flip the newest current-history bit
            assert np.array_equal(inc.table[code], inc.table[twin])
        with pytest.raises(ConfigError):
            inc.for_transition(0, 0)


@pytest.mark.parametrize("kind", engine.KINDS)
def test_path_scores_tau1_are_the_increment_lookup(kind):
    inc = markov.score_increment_table(kind, 2)
    scores = markov.path_score_table(kind, 2, 1)
    assert np.array_equal(scores, inc.table.T)


def test_path_scores_tau2_parity_and_range():
    scores = markov.path_score_table("minority", 2, 2)
    assert set(np.unique(scores)) <= {-2, 0, 2}


@pytest.mark.parametrize("kind", engine.KINDS)
def test_path_scores_tau3_match_explicit_replay(kind):
    m, tau = 2, 3
    scores = markov.path_score_table(kind, m, tau)
    table = strat.build_reduced_strategy_space(m).table
    n_states = scores.shape[1]
    for code in range(n_states):
        for k in (0, 3, 5, 7):
            assert scores[k, code] == replay_strategy_score(kind, table, k, code, m, tau)


def brute_force_decided(kind, disorder, tau):
    """Per-path decided vote and coin-toss count by per-agent enumeration."""
    m = disorder.m
    table = strat.build_reduced_strategy_space(m).table
    n_bits = m + tau + (1 if kind == "dollar" else 0)
    hm = (1 << m) - 1
    decided = np.zeros(1 << n_bits, dtype=int)
    undecided = np.zeros(1 << n_bits, dtype=int)
    agents = disorder.expand_agents()
    for code in range(1 << n_bits):
        h = code & hm
        for k, l in agents:
            sk = replay_strategy_score(kind, table, k, code, m, tau)
            sl = replay_strategy_score(kind, table, l, code, m, tau)
            ak, al = int(table[k, h]), int(table[l, h])
            if sk > sl:
                decided[code] += ak
            elif sl > sk:
                decided[code] += al
            elif ak == al:
                decided[code] += ak
            else:
                undecided[code] += 1
    return decided, undecided


@pytest.mark.parametrize("kind,tau", [("minority", 1), ("majority", 1),
                                      ("dollar", 1), ("minority", 2)])
def test_decided_undecided_matches_brute_force(kind, tau):
    d = fixture_disorder()
    decided, undecided = markov.decided_and_undecided(kind, d, tau)
    ref_d, ref_u = brute_force_decided(kind, d, tau)
    assert np.array_equal(decided, ref_d)
    assert np.array_equal(undecided, ref_u)


def test_identical_pair_never_undecided():
    omega = np.zeros((8, 8), dtype=np.int64)
    omega[2, 2] = 31
    d = strat.disorder_from_dense(omega, m=2)
    decided, undecided = markov.decided_and_undecided("minority", d, 1)
    assert np.all(undecided == 0)
    assert np.all(np.abs(decided) == 31)


def test_vote_parity_invariant():
    for seed in range(12):
        m = 2 + seed % 2
        d = strat.sample_quenched_disorder(31, 2, m, seed=seed)
        for kind in engine.KINDS:
            decided, undecided = markov.decided_and_undecided(kind, d, 1)
            assert np.all((31 - undecided - decided) % 2 == 0)
            assert np.all(np.abs(decided) + undecided <= 31)


def test_transition_matrix_is_column_stochastic():
    for seed in range(8):
        d = strat.sample_quenched_disorder(31, 2, 2, seed=100 + seed)
        for kind in engine.KINDS:
            t = markov.transition_matrix(kind, d, 1)
            dense = t.dense()
            assert np.all(dense >= 0) and np.all(dense <= 1)
            assert np.allclose(dense.sum(axis=0), 1.0, atol=1e-12)
            # sparsity pattern sits inside the shift-append adjacency
            bits = markov.path_state_bits(kind, d.m, 1)
            assert np.all(dense[markov.adjacency_matrix(bits) == 0] == 0)


def test_deterministic_chain_has_unit_entries():
    omega = np.zeros((8, 8), dtype=np.int64)
    omega[2, 2] = 31
    d = strat.disorder_from_dense(omega, m=2)
    t = markov.transition_matrix("minority", d, 1)
    assert set(np.unique(t.dense())) <= {0.0, 1.0}


def test_transition_probabilities_match_simulation():
    d = fixture_disorder()
    t = markov.transition_matrix("minority", d, 1)
    cfg = SimConfig(n_agents=31, memory=2, horizon=1, kind="minority",
                    steps=1_000_000, warmup=200, seed=19)
    state = engine.init_state(cfg, d)
    res = engine.run(cfg, d)
    code = state.path & 7
    visits = np.zeros(8, dtype=int)
    ones = np.zeros(8, dtype=int)
    for bit in res.bit_series:
        visits[code] += 1
        ones[code] += bit
        code = ((code << 1) | int(bit)) & 7
    for p in range(8):
        if visits[p] == 0:
            continue
        phat = ones[p] / visits[p]
        sigma = np.sqrt(max(t.prob_one[p] * (1 - t.prob_one[p]), 1e-12) / visits[p])
        assert abs(phat - t.prob_one[p]) <= max(3 * sigma, 1e-3)


def test_steady_state_uniform_for_fair_coin_chain():
    t = markov.TransitionMatrix(kind="minority", m=2, tau=1, n_states=8,
                                prob_one=np.full(8, 0.5),
                                decided=np.zeros(8, dtype=np.int64),
                                undecided=np.full(8, 31, dtype=np.int64))
    pi = markov.steady_state(t)
    assert np.allclose(pi, 1 / 8, atol=1e-12)


def test_steady_state_deterministic_cycle():
    # 2-bit states: 01 <-> 10 is the only recurrent cycle
    prob_one = np.array([1.0, 0.0, 1.0, 0.0])
    t = markov.TransitionMatrix(kind="minority", m=1, tau=1, n_states=4,
                                prob_one=prob_one,
                                decided=np.zeros(4, dtype=np.int64),
                                undecided=np.zeros(4, dtype=np.int64))
    pi = markov.steady_state(t)
    assert np.allclose(pi, [0.0, 0.5, 0.5, 0.0], atol=1e-12)


def test_steady_state_matches_occupancy_frequencies():
    d = fixture_disorder()
    t = markov.transition_matrix("minority", d, 1)
    pi = markov.steady_state(t)
    runs, steps = 40, 25_000
    freqs = np.zeros((runs, 8))
    for r in range(runs):
        cfg = SimConfig(n_agents=31, memory=2, horizon=1, kind="minority",
                        steps=steps, warmup=400, seed=engine.run_seed(20, r))
        state = engine.init_state(cfg, d)
        res = engine.run(cfg, d)
        code = state.path & 7
        for bit in res.bit_series:
            freqs[r, code] += 1
            code = ((code << 1) | int(bit)) & 7
    freqs /= steps
    mean = freqs.mean(axis=0)
    se = freqs.std(axis=0, ddof=1) / np.sqrt(runs)
    assert np.all(np.abs(mean - pi) <= 3 * np.maximum(se, 1e-4))


def test_steady_state_residual_is_tiny_even_when_metastable():
    # locked-in chains with rare escapes defeat plain power iteration
    for seed in (0, 1, 2, 3, 4):
        d = strat.sample_quenched_disorder(31, 2, 3, seed=seed)
        for kind in engine.KINDS:
            t = markov.transition_matrix(kind, d, 1)
            pi = markov.steady_state(t)
            assert np.abs(t.apply(pi) - pi).max() <= 1e-12
            assert pi.min() >= 0 and abs(pi.sum() - 1) < 1e-12


def test_single_agent_gain_includes_coin_losses():
    # one agent holding a table and its negation ties whenever the window
    # entries cancel; a lone minority player always loses, coin or not
    omega = np.zeros((8, 8), dtype=np.int64)
    omega[0, 7] = 1
    d = strat.disorder_from_dense(omega, m=2)
    t = markov.transition_matrix("minority", d, 2)
    pi = markov.steady_state(t)
    assert float(pi[t.undecided > 0].sum()) > 0  # coin paths really occur
    gain = markov.expected_agent_gain("minority", d, 2, chain=t, pi=pi)
    assert gain == pytest.approx(-1.0, abs=1e-12)
    # the decided-vote average alone would claim a smaller loss
    decided_only = -float(np.abs(t.decided) @ pi)
    assert decided_only > -0.999


def test_gains_are_bounded_by_one():
    for seed in range(6):
        d = strat.sample_quenched_disorder(31, 2, 2, seed=200 + seed)
        for kind in engine.KINDS:
            a, s = markov.analytic_gains(kind, d, 1)
            assert abs(a) <= 1.0 and abs(s) <= 1.0


def test_uniform_representation_has_zero_strategy_gain():
    # equal multiplicity on every table: each strategy cancels its negation
    omega = np.diag(np.full(8, 4)).astype(np.int64)
    d = strat.disorder_from_dense(omega, m=2)
    for kind in engine.KINDS:
        assert markov.expected_strategy_gain(kind, d, 1) == pytest.approx(0.0, abs=1e-12)


def test_analytic_gains_match_simulation_smoke():
    d = fixture_disorder()
    agent, strategy = markov.analytic_gains("minority", d, 1)
    runs = 12
    a = np.zeros(runs)
    s = np.zeros(runs)
    for r in range(runs):
        cfg = SimConfig(n_agents=31, memory=2, horizon=1, kind="minority",
                        steps=20_000, warmup=400, seed=engine.run_seed(21, r))
        res = engine.run(cfg, d)
        a[r], s[r] = res.agent_wealth_per_step, res.strategy_wealth_per_step
    assert abs(a.mean() - agent) <= 4 * a.std(ddof=1) / np.sqrt(runs)
    assert abs(s.mean() - strategy) <= 4 * s.std(ddof=1) / np.sqrt(runs)


def test_finite_horizon_converges_to_steady_state_on_ergodic_chain():
    d = fixture_disorder()
    agent, strategy = markov.analytic_gains("minority", d, 1)
    fa, fs = markov.finite_horizon_gains("minority", d, 1, warmup=3000, steps=5000)
    assert fa == pytest.approx(agent, abs=1e-6)
    assert fs == pytest.approx(strategy, abs=1e-6)


def test_size_guards():
    with pytest.raises(ConfigError):
        markov.path_state_bits("minority", 10, 10)
    with pytest.raises(ConfigError):
        markov.score_increment_table("minority", 7)
    d = strat.sample_quenched_disorder(99, 2, 2, seed=0)
    with pytest.raises(ConfigError):
        markov.transition_matrix("minority", d, 1)
