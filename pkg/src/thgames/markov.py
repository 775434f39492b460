"""Closed-form expected gains via the path-history Markov chain.

The winning-bit process of a time-horizon game is Markov on path states:
the last m+tau bits for the minority and majority games, and one bit more
for the dollar game, whose lagged payoff window reaches one step further
back.  Path codes keep the newest bit in the least significant position; a
transition shifts left, drops the oldest bit, and appends the new one.

For every path state the strategy score windows are fully determined, so
each agent's choice is either decided or a fair coin toss between opposite
actions.  The transition matrix follows from the binomial spread of the
coin tosses around the decided vote, and expected per-step gains are exact
steady-state averages, including the coin-toss agents' own contribution
(for the minority game a tossed coin still loses on average, so the
undecided term is kept rather than dropped).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from . import strategies as strat
from .engine import KINDS
from .errors import ConfigError, ConvergenceError

MAX_PATH_BITS = 16   # chain size guard, states = 2^bits (dollar uses one more)
MAX_AGENTS_EXACT = 64  # binomial sums evaluated exactly


def action_table(m: int) -> np.ndarray:
    """All RSS tables stacked in order, shape (2^(m+1), 2^m)."""
    return strat.build_reduced_strategy_space(m).table


def path_state_bits(kind: str, m: int, tau: int) -> int:
    """Bits of winning history that make the chain Markov for this game."""
    if kind not in KINDS:
        raise ConfigError(f"unknown game kind {kind!r}")
    if m + tau > MAX_PATH_BITS:
        raise ConfigError(f"m+tau={m + tau} exceeds the chain size guard {MAX_PATH_BITS}")
    return m + tau + (1 if kind == "dollar" else 0)


@dataclass(frozen=True)
class StepIncrements:
    """One-step virtual payoff change per strategy, as a lookup table.

    A transition's increment is fully determined by the newest `state_bits`
    bits after the step: the decision history, the new winning bit, and for
    the dollar game the lagged history one shift further back.  `table[c]`
    is the per-strategy increment vector for new-state suffix code c.
    """

    kind: str
    m: int
    state_bits: int       # m+1 for minority/majority, m+2 for dollar
    table: np.ndarray     # (2^state_bits, R) int8

    def for_transition(self, new_hist: int, old_hist: int) -> np.ndarray:
        """Increment vector for the allowed history transition old -> new.

        Only meaningful for the minority and majority games, where the
        (old history, new bit) pair is exactly one suffix code.
        """
        if self.kind == "dollar":
            raise ConfigError("dollar increments need the lagged bit; index table directly")
        hm = (1 << self.m) - 1
        if (new_hist >> 1) != (old_hist & (hm >> 1)):
            raise ConfigError(f"transition {old_hist}->{new_hist} not reachable")
        return self.table[(old_hist << 1) | (new_hist & 1)]


def score_increment_table(kind: str, m: int) -> StepIncrements:
    """Per-transition strategy payoff changes for one step of the game.

    Minority: a strategy whose action at the decision history lands in the
    minority gains one point; majority is the exact negation; the dollar
    increment settles the action prescribed one step earlier and therefore
    does not depend on the current decision history at all.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown game kind {kind!r}")
    if m > 6:
        raise ConfigError("increment table guarded to m <= 6")
    act = action_table(m)
    bits = m + 2 if kind == "dollar" else m + 1
    codes = np.arange(1 << bits)
    hm = (1 << m) - 1
    sig = 2 * (codes & 1) - 1
    if kind == "dollar":
        hist = (codes >> 2) & hm
        table = (act[:, hist] * sig).T
    else:
        hist = (codes >> 1) & hm
        sign = -1 if kind == "minority" else 1
        table = (sign * act[:, hist] * sig).T
    return StepIncrements(kind=kind, m=m, state_bits=bits,
                          table=np.ascontiguousarray(table, dtype=np.int8))


def _window_scores(kind: str, act: np.ndarray, m: int, tau: int, n_states: int) -> np.ndarray:
    """Score-window sums for each path state, rows matching `act`."""
    hm = (1 << m) - 1
    codes = np.arange(n_states)
    scores = np.zeros((act.shape[0], n_states), dtype=np.int64)
    for i in range(tau):
        sig = 2 * ((codes >> i) & 1) - 1
        if kind == "dollar":
            hist = (codes >> (i + 2)) & hm
            scores += act[:, hist] * sig
        else:
            hist = (codes >> (i + 1)) & hm
            sign = -1 if kind == "minority" else 1
            scores += sign * act[:, hist] * sig
    return scores


def path_score_table(kind: str, m: int, tau: int) -> np.ndarray:
    """Accumulated window score of every RSS strategy along every path state.

    Shape (2^(m+1), 2^bits) with bits = path_state_bits(kind, m, tau).
    For tau=1 this is the one-step increment table read as a lookup.
    """
    bits = path_state_bits(kind, m, tau)
    if (1 << (m + 1)) * (1 << bits) > (1 << 24):
        raise ConfigError("path score table too large; restrict to held strategies")
    return _window_scores(kind, action_table(m), m, tau, 1 << bits)


def adjacency_matrix(n_bits: int) -> np.ndarray:
    """0/1 matrix of allowed path transitions, entry [new, old]."""
    n = 1 << n_bits
    gamma = np.zeros((n, n), dtype=np.int8)
    old = np.arange(n)
    for b in (0, 1):
        gamma[((old << 1) | b) & (n - 1), old] = 1
    return gamma


def _held_tables(disorder: strat.QuenchedDisorder, kind: str, tau: int):
    """Action rows and window scores for the strategies actually held."""
    if disorder.strategies_per_agent != 2:
        raise ConfigError("analytic treatment covers S=2 disorders")
    if disorder.space != "reduced":
        raise ConfigError("analytic treatment covers the reduced strategy space")
    m = disorder.m
    bits = path_state_bits(kind, m, tau)
    held = np.unique(disorder.tuples)
    act = strat.strategy_rows(m, held, disorder.space)
    scores = _window_scores(kind, act, m, tau, 1 << bits)
    pos = {int(k): i for i, k in enumerate(held)}
    return m, bits, held, pos, act, scores


def decided_and_undecided(kind: str, disorder: strat.QuenchedDisorder,
                          tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Decided net vote and coin-toss agent count for every path state.

    An agent is undecided exactly when its two strategies have equal window
    scores and prescribe different actions for the current history; a tie
    between strategies that agree still yields a decided vote.
    """
    m, bits, held, pos, act, scores = _held_tables(disorder, kind, tau)
    n_states = 1 << bits
    hist = np.arange(n_states) & ((1 << m) - 1)
    decided = np.zeros(n_states, dtype=np.int64)
    undecided = np.zeros(n_states, dtype=np.int64)
    for (k, l), c in zip(disorder.tuples, disorder.multiplicities):
        i, j = pos[int(k)], pos[int(l)]
        ai = act[i, hist].astype(np.int64)
        aj = act[j, hist].astype(np.int64)
        action = np.where(scores[i] > scores[j], ai,
                          np.where(scores[j] > scores[i], aj,
                                   np.where(ai == aj, ai, 0)))
        decided += c * action
        undecided += c * ((scores[i] == scores[j]) & (ai != aj))
    return decided, undecided


@lru_cache(maxsize=256)
def _binom_pmf(n: int) -> np.ndarray:
    return np.array([math.comb(n, x) for x in range(n + 1)], dtype=float) / 2.0 ** n


@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic path-state chain in sparse successor form.

    Each state has exactly two successors, shift-append with new bit 0 or 1;
    `prob_one[p]` is the probability of appending bit 1 when leaving p.
    """

    kind: str
    m: int
    tau: int
    n_states: int
    prob_one: np.ndarray
    decided: np.ndarray
    undecided: np.ndarray

    def successors(self, p: int) -> tuple[int, int]:
        mask = self.n_states - 1
        return ((p << 1) & mask, ((p << 1) | 1) & mask)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """One chain step of a distribution vector."""
        codes = np.arange(self.n_states)
        mask = self.n_states - 1
        lo = np.bincount((codes << 1) & mask, weights=v * (1.0 - self.prob_one),
                         minlength=self.n_states)
        hi = np.bincount(((codes << 1) | 1) & mask, weights=v * self.prob_one,
                         minlength=self.n_states)
        return lo + hi

    def dense(self) -> np.ndarray:
        if self.n_states > 4096:
            raise ConfigError("dense form guarded to 4096 states")
        t = np.zeros((self.n_states, self.n_states))
        mask = self.n_states - 1
        for p in range(self.n_states):
            t[(p << 1) & mask, p] += 1.0 - self.prob_one[p]
            t[((p << 1) | 1) & mask, p] += self.prob_one[p]
        return t


def transition_matrix(kind: str, disorder: strat.QuenchedDisorder,
                      tau: int) -> TransitionMatrix:
    """Exact transition probabilities from the binomial coin-toss spread."""
    if disorder.n_agents > MAX_AGENTS_EXACT:
        raise ConfigError(f"exact binomial sums guarded to N <= {MAX_AGENTS_EXACT}")
    decided, undecided = decided_and_undecided(kind, disorder, tau)
    n_states = len(decided)
    prob_one = np.zeros(n_states)
    for nu in np.unique(undecided):
        sel = undecided == nu
        pmf = _binom_pmf(int(nu))
        votes = decided[sel, None] + 2 * np.arange(nu + 1)[None, :] - nu
        prob_one[sel] = (votes > 0) @ pmf + 0.5 * ((votes == 0) @ pmf)
    return TransitionMatrix(kind=kind, m=disorder.m, tau=tau, n_states=n_states,
                            prob_one=prob_one, decided=decided, undecided=undecided)


def _sparse_chain(t: TransitionMatrix) -> sp.csr_matrix:
    codes = np.arange(t.n_states)
    mask = t.n_states - 1
    rows = np.concatenate([(codes << 1) & mask, ((codes << 1) | 1) & mask])
    cols = np.concatenate([codes, codes])
    vals = np.concatenate([1.0 - t.prob_one, t.prob_one])
    keep = vals > 0.0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])),
                         shape=(t.n_states, t.n_states))


def _class_stationary(tc: sp.spmatrix) -> np.ndarray:
    """Stationary vector of one irreducible column-stochastic block."""
    nc = tc.shape[0]
    if nc == 1:
        return np.ones(1)
    a = (tc - sp.identity(nc, format="csr")).tolil()
    a[0, :] = 1.0  # replace one redundant balance row with normalization
    pi = spsolve(a.tocsc(), np.eye(nc, 1).ravel())
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def steady_state(t: TransitionMatrix, tol: float = 1e-12,
                 max_iter: int = 10 ** 6) -> np.ndarray:
    """Limit of the uniform-start chain iteration, computed exactly.

    The chain can be reducible, and metastable lock-in classes with
    escape rates far below 1e-6 make plain power iteration hopeless, so
    the recurrent classes are found by strong-component decomposition,
    each class's stationary vector is solved directly, and the classes
    are weighted by the absorption probability of a uniformly started
    trajectory.  A short damped polish then certifies the fixed-point
    residual against `tol`.
    """
    n = t.n_states
    chain = _sparse_chain(t)
    # graph edge u -> v corresponds to matrix entry [v, u]
    n_comp, labels = connected_components(chain.T, directed=True, connection="strong")
    src, dst = chain.T.nonzero()
    has_exit = np.zeros(n_comp, dtype=bool)
    cross = labels[src] != labels[dst]
    has_exit[labels[src[cross]]] = True

    recurrent = ~has_exit[labels]  # per-state flag
    uniform = np.full(n, 1.0 / n)
    weight_in = uniform.copy()
    if not recurrent.all():
        tr = np.where(~recurrent)[0]
        rec = np.where(recurrent)[0]
        csc = chain.tocsc()
        q = csc[tr][:, tr]
        # cumulative transient occupation, then one step into the recurrent set
        visits = spsolve(sp.identity(len(tr), format="csc") - q, uniform[tr])
        weight_in = np.zeros(n)
        weight_in[rec] = uniform[rec] + csc[rec][:, tr] @ visits

    pi = np.zeros(n)
    for c in np.unique(labels[recurrent]):
        members = np.where(labels == c)[0]
        w = float(weight_in[members].sum())
        if w <= 0.0:
            continue
        block = chain[members][:, members]
        pi[members] = w * _class_stationary(block)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()

    for _ in range(min(max_iter, 10_000)):
        tp = t.apply(pi)
        if np.abs(tp - pi).max() <= tol:
            return pi / pi.sum()
        pi = 0.5 * (pi + tp)
    raise ConvergenceError(f"steady-state residual above {tol} after polish")


def _vote_grid(decided: int, n_undecided: int) -> tuple[np.ndarray, np.ndarray]:
    pmf = _binom_pmf(n_undecided)
    votes = decided + 2 * np.arange(n_undecided + 1) - n_undecided
    return votes, pmf


def agent_gain_by_state(t: TransitionMatrix, n_agents: int) -> np.ndarray:
    """Expected mean agent payoff per step given the departure state.

    Minority and majority payoffs sum to -|A| and +|A|, so the per-state
    value is the expectation of |A| over the coin-toss spread around the
    decided vote; the coin agents' own losses are included, not dropped.
    The dollar payoff couples consecutive steps: E[A(t) * sign(A(t+1))] is
    taken by splitting the current spread on the realized bit and weighting
    each branch with the successor state's expected vote sign.
    """
    g = np.zeros(t.n_states)
    if t.kind in ("minority", "majority"):
        sign = -1.0 if t.kind == "minority" else 1.0
        for p in range(t.n_states):
            votes, pmf = _vote_grid(t.decided[p], t.undecided[p])
            g[p] = sign * float(pmf @ np.abs(votes))
        return g / n_agents

    expected_sign = np.zeros(t.n_states)
    for p in range(t.n_states):
        votes, pmf = _vote_grid(t.decided[p], t.undecided[p])
        expected_sign[p] = float(pmf @ np.sign(votes))
    for p in range(t.n_states):
        votes, pmf = _vote_grid(t.decided[p], t.undecided[p])
        lo, hi = t.successors(p)
        up = float(pmf[votes > 0] @ votes[votes > 0])
        down = float(pmf[votes < 0] @ votes[votes < 0])
        g[p] = up * expected_sign[hi] + down * expected_sign[lo]
    return g / n_agents


def strategy_gain_by_state(kind: str, disorder: strat.QuenchedDisorder,
                           n_states: int) -> np.ndarray:
    """Multiplicity-weighted mean one-step virtual gain per arrival state."""
    m = disorder.m
    held = np.unique(disorder.tuples)
    act = strat.strategy_rows(m, held, disorder.space)
    counts = strat.slot_counts(disorder)[held].astype(float)
    codes = np.arange(n_states)
    hm = (1 << m) - 1
    sig = 2 * (codes & 1) - 1
    if kind == "dollar":
        hist = (codes >> 2) & hm
        delta = act[:, hist] * sig
    else:
        hist = (codes >> 1) & hm
        sign = -1 if kind == "minority" else 1
        delta = sign * act[:, hist] * sig
    n_slots = disorder.strategies_per_agent * disorder.n_agents
    return (counts @ delta) / n_slots


def expected_agent_gain(kind: str, disorder: strat.QuenchedDisorder, tau: int,
                        chain: TransitionMatrix | None = None,
                        pi: np.ndarray | None = None) -> float:
    """Exact stationary per-step mean agent gain."""
    t = chain if chain is not None else transition_matrix(kind, disorder, tau)
    dist = pi if pi is not None else steady_state(t)
    return float(agent_gain_by_state(t, disorder.n_agents) @ dist)


def expected_strategy_gain(kind: str, disorder: strat.QuenchedDisorder, tau: int,
                           chain: TransitionMatrix | None = None,
                           pi: np.ndarray | None = None) -> float:
    """Exact stationary multiplicity-weighted per-step strategy gain.

    The one-step increment is a function of the arrival state alone, and
    the arrival distribution equals the stationary one, so no division by
    tau appears: window sums are never re-averaged here.
    """
    t = chain if chain is not None else transition_matrix(kind, disorder, tau)
    dist = pi if pi is not None else steady_state(t)
    return float(strategy_gain_by_state(kind, disorder, t.n_states) @ dist)


def analytic_gains(kind: str, disorder: strat.QuenchedDisorder,
                   tau: int) -> tuple[float, float]:
    """Agent and strategy expected gains sharing one chain solve."""
    t = transition_matrix(kind, disorder, tau)
    pi = steady_state(t)
    return (expected_agent_gain(kind, disorder, tau, chain=t, pi=pi),
            expected_strategy_gain(kind, disorder, tau, chain=t, pi=pi))


def finite_horizon_gains(kind: str, disorder: strat.QuenchedDisorder, tau: int,
                         warmup: int, steps: int) -> tuple[float, float]:
    """Exact expectation of the engine's measured-window gain estimators.

    Propagates the uniform initial path distribution through `warmup`
    steps and averages the per-state gains over the next `steps`.  On an
    ergodic chain this converges to the stationary values; on chains with
    slow metastable escape it is the unbiased reference for a simulation
    of the same length, which no infinite-horizon average can be.
    """
    if warmup < 1:
        raise ConfigError("finite-horizon comparison needs at least one warmup step")
    t = transition_matrix(kind, disorder, tau)
    g_agent = agent_gain_by_state(t, disorder.n_agents)
    g_strategy = strategy_gain_by_state(kind, disorder, t.n_states)
    v = np.full(t.n_states, 1.0 / t.n_states)
    agent_acc = 0.0
    strategy_acc = 0.0
    # the dollar payoff measured at step t was fixed one step earlier
    agent_lag = 1 if kind == "dollar" else 0
    for step_no in range(1, warmup + steps + 1):
        if step_no > warmup - agent_lag and step_no <= warmup + steps - agent_lag:
            agent_acc += float(g_agent @ v)
        v = t.apply(v)
        if step_no > warmup:
            strategy_acc += float(g_strategy @ v)
    return agent_acc / steps, strategy_acc / steps
