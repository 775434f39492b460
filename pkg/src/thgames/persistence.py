"""Scale-dependent persistence of binary series and the anti-persistent generator.

At scale m_s, every length-m_s window of the series is a history.  Each
time a history recurs, the bit that follows it is compared with the bit
that followed its previous occurrence: a repeat is persistent, a flip
anti-persistent.  The persistence score pools these comparisons over all
2^m_s histories; 0.5 is the random limit, below is anti-persistent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import ConfigError


@dataclass(frozen=True)
class PersistenceScore:
    scale: int
    value: float          # persistent recurrences / window_count
    window_count: int     # history recurrences evaluated

    @property
    def antipersistence(self) -> float:
        return 1.0 - self.value


def persistence(series: np.ndarray, scale: int) -> PersistenceScore:
    """Score the fraction of repeated-history follower bits that repeat.

    Needs at least one history recurrence, so the series must be longer
    than scale + 1.
    """
    bits = np.asarray(series, dtype=np.int64)
    n = len(bits)
    if scale < 1:
        raise ConfigError("scale must be positive")
    if n < scale + 2:
        raise ConfigError(f"series of length {n} too short for scale {scale}")
    # history code ending at position t, follower at t+1
    codes = np.zeros(n - scale, dtype=np.int64)
    for i in range(scale):
        codes = (codes << 1) | bits[i : i + n - scale]
    followers = bits[scale:]
    # occurrences are already in time order; stable sort groups by history
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    sorted_follow = followers[order]
    same_history = sorted_codes[1:] == sorted_codes[:-1]
    repeats = sorted_follow[1:] == sorted_follow[:-1]
    window_count = int(same_history.sum())
    if window_count == 0:
        raise ConfigError("no history recurs; series too short for this scale")
    persistent = int((same_history & repeats).sum())
    return PersistenceScore(scale=scale, value=persistent / window_count,
                            window_count=window_count)


def perfectly_antipersistent_series(m: int, seed_table: np.ndarray,
                                    seed_history: int, length: int) -> np.ndarray:
    """Two-table toggle generator that settles into zero persistence at scale m.

    `seed_table` maps each m-bit history to an action in {-1, +1}; +1 emits
    bit 1.  Whenever a history is used, that history switches to the
    negated table for its next occurrence.  The output begins with the m
    seed-history bits; after a transient of at most 2^(m+2) bits every
    repeated history is followed by alternating bits, whichever table and
    history seed the run.
    """
    table = np.asarray(seed_table, dtype=np.int64)
    n_hist = 1 << m
    if table.shape != (n_hist,) or not np.all(np.abs(table) == 1):
        raise ConfigError(f"seed table must hold 2^{m} actions in -1/+1")
    if not 0 <= seed_history < n_hist:
        raise ConfigError("seed history out of range")
    if length < (1 << (m + 2)):
        raise ConfigError(f"length must cover the transient, at least {1 << (m + 2)}")
    first_bits = (table > 0).astype(np.uint8)
    flipped = np.zeros(n_hist, dtype=bool)
    out = np.empty(length, dtype=np.uint8)
    for i in range(m):
        out[i] = (seed_history >> (m - 1 - i)) & 1
    h = seed_history
    mask = n_hist - 1
    for t in range(m, length):
        bit = first_bits[h] ^ flipped[h]
        flipped[h] = not flipped[h]
        out[t] = bit
        h = ((h << 1) | int(bit)) & mask
    return out


def persistence_grid(kinds, m_values, scales, tau: int = 100, runs: int = 100,
                     length: int = 1000, n_agents: int = 31,
                     strategies_per_agent: int = 2, warmup: int = 0,
                     seed: int = 0):
    """Mean persistence of game bit series per (kind, m, scale) cell.

    Returns {kind: (means, ses)} with arrays indexed [m, scale] following
    the given orderings; each run is an independent seeded game with fresh
    disorder.  The default protocol scores the series a fresh game emits
    from its very first step (empty score windows, no warmup), which is
    where the memory-size transition of the minority series shows up at
    the expected point; pass a warmup to analyze settled dynamics instead.
    """
    m_values = list(m_values)
    scales = list(scales)
    out = {}
    for kind in kinds:
        means = np.zeros((len(m_values), len(scales)))
        ses = np.zeros_like(means)
        for mi, m in enumerate(m_values):
            values = np.zeros((runs, len(scales)))
            for r in range(runs):
                cfg = engine.SimConfig(
                    n_agents=n_agents, memory=m, horizon=tau, kind=kind,
                    steps=length, strategies_per_agent=strategies_per_agent,
                    warmup=warmup, prefill_scores=warmup > 0,
                    seed=engine.run_seed(seed, engine.KINDS.index(kind), m, r),
                )
                bits = engine.run(cfg).bit_series
                for si, scale in enumerate(scales):
                    values[r, si] = persistence(bits, scale).value
            means[mi] = values.mean(axis=0)
            ses[mi] = values.std(axis=0, ddof=1) / np.sqrt(runs)
        out[kind] = (means, ses)
    return out
