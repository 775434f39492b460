"""Strategy tables, the reduced strategy space, and quenched strategy assignments.

A strategy is a lookup table mapping each m-bit history to an action in
{-1, +1}.  Histories are encoded as integers with the most recent winning
bit in the least significant position.  The reduced strategy space (RSS)
contains 2^(m+1) tables: the sign rows of the order-2^m Walsh-Hadamard
family together with their pointwise negations, ordered so that table k is
the negation of table (R - 1 - k) for R = 2^(m+1), 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MAX_MEMORY = 14
MAX_FULL_SPACE_MEMORY = 4
# dense tensor / text serialization guard, R^S entries
_MAX_DENSE_ENTRIES = 1 << 24


def _bit_reverse(x: int, nbits: int) -> int:
    r = 0
    for _ in range(nbits):
        r = (r << 1) | (x & 1)
        x >>= 1
    return r


def reduced_strategy_row(m: int, k: int) -> np.ndarray:
    """Return table k of the RSS for memory m as an int8 array of length 2^m.

    Rows 0..2^m-1 are negated Walsh rows, rows 2^m..2^(m+1)-1 their
    negations in reverse order, which pins row k == -row (R-1-k) and, for
    m=2, reproduces the canonical eight-table listing.
    """
    n_hist = 1 << m
    r = 2 * n_hist
    if not 0 <= k < r:
        raise ConfigError(f"strategy index {k} out of range for m={m}")
    if k < n_hist:
        walsh_index, sign = _bit_reverse(k, m), -1
    else:
        walsh_index, sign = _bit_reverse(r - 1 - k, m), +1
    h = np.arange(n_hist, dtype=np.int64)
    masked = h & walsh_index
    parity = np.zeros(n_hist, dtype=np.int64)
    while masked.any():
        parity ^= masked & 1
        masked >>= 1
    walsh = np.where(parity == 0, 1, -1).astype(np.int8)
    return sign * walsh


def full_strategy_row(m: int, k: int) -> np.ndarray:
    """Table k of the full 2^(2^m) space; bit h of k (history 0 = top bit)."""
    n_hist = 1 << m
    if not 0 <= k < (1 << n_hist):
        raise ConfigError(f"strategy index {k} out of range for full space m={m}")
    h = np.arange(n_hist)
    bits = (k >> (n_hist - 1 - h)) & 1
    return (2 * bits - 1).astype(np.int8)


def strategy_rows(m: int, ks: np.ndarray, space: str = "reduced") -> np.ndarray:
    """Stack the tables for the given strategy indices, one row per index."""
    row = reduced_strategy_row if space == "reduced" else full_strategy_row
    return np.stack([row(m, int(k)) for k in ks])


def space_size(m: int, space: str = "reduced") -> int:
    if space == "reduced":
        return 1 << (m + 1)
    if space == "full":
        if m > MAX_FULL_SPACE_MEMORY:
            raise ConfigError(f"full strategy space limited to m <= {MAX_FULL_SPACE_MEMORY}")
        return 1 << (1 << m)
    raise ConfigError(f"unknown strategy space {space!r}")


@dataclass(frozen=True)
class ReducedStrategySpace:
    """The 2^(m+1) minimally spanning strategy tables for memory m."""

    m: int
    table: np.ndarray  # (2^(m+1), 2^m) int8

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.table[k]

    def negation_index(self, k: int) -> int:
        """Index of the pointwise negation of table k."""
        return self.size - 1 - k


def build_reduced_strategy_space(m: int) -> ReducedStrategySpace:
    """Materialize the RSS for 1 <= m <= 14.

    The full table has 2^(m+1) * 2^m entries; above m=12 that is hundreds
    of megabytes, so callers working at large m should prefer
    reduced_strategy_row / strategy_rows for the handful of tables they
    actually hold.
    """
    if not 1 <= m <= MAX_MEMORY:
        raise ConfigError(f"memory m={m} outside supported range 1..{MAX_MEMORY}")
    r = 1 << (m + 1)
    table = np.empty((r, 1 << m), dtype=np.int8)
    for k in range(r):
        table[k] = reduced_strategy_row(m, k)
    return ReducedStrategySpace(m=m, table=table)


@dataclass(frozen=True)
class QuenchedDisorder:
    """Once-and-for-all assignment of strategy tuples to agents.

    Stored sparsely as sorted index tuples with multiplicities; the order
    of strategies within an agent has no meaning, so tuples are kept in
    nondecreasing index order (the upper-triangular convention for S=2).
    """

    m: int
    strategies_per_agent: int
    n_agents: int
    space: str
    tuples: np.ndarray        # (n_distinct, S) int64, rows sorted, lexicographically ordered
    multiplicities: np.ndarray  # (n_distinct,) int64

    def __post_init__(self):
        if self.multiplicities.sum() != self.n_agents:
            raise ConfigError("disorder multiplicities do not sum to the agent count")
        if self.tuples.shape != (len(self.multiplicities), self.strategies_per_agent):
            raise ConfigError("disorder tuple array shape mismatch")

    @property
    def n_strategies(self) -> int:
        return space_size(self.m, self.space)

    def dense(self) -> np.ndarray:
        """The S-dimensional count tensor (upper-triangular for S=2)."""
        r = self.n_strategies
        if r ** self.strategies_per_agent > _MAX_DENSE_ENTRIES:
            raise ConfigError("dense tensor too large; use the sparse tuples")
        omega = np.zeros((r,) * self.strategies_per_agent, dtype=np.int64)
        for tup, c in zip(self.tuples, self.multiplicities):
            omega[tuple(tup)] += c
        return omega

    def expand_agents(self) -> np.ndarray:
        """(N, S) strategy indices, one row per agent, tuple-lexicographic order."""
        rows = np.repeat(self.tuples, self.multiplicities, axis=0)
        return np.ascontiguousarray(rows)


def disorder_from_dense(omega: np.ndarray, m: int, space: str = "reduced") -> QuenchedDisorder:
    """Build a disorder from an S-dimensional count tensor."""
    s = omega.ndim
    idx = np.argwhere(omega > 0)
    if not all(np.all(np.diff(row) >= 0) for row in idx):
        raise ConfigError("count tensor must live on sorted tuples (upper triangular for S=2)")
    counts = omega[tuple(idx.T)].astype(np.int64)
    return QuenchedDisorder(
        m=m,
        strategies_per_agent=s,
        n_agents=int(counts.sum()),
        space=space,
        tuples=idx.astype(np.int64),
        multiplicities=counts,
    )


def sample_quenched_disorder(
    n_agents: int,
    strategies_per_agent: int,
    m: int,
    space: str = "reduced",
    seed: int | np.random.Generator = 0,
) -> QuenchedDisorder:
    """Draw N independent uniform S-tuples (with replacement inside a tuple).

    Deterministic for a fixed seed.  Tuples are sorted per agent before
    accumulation, so an agent may hold the same strategy twice.
    """
    if n_agents < 1 or strategies_per_agent < 1:
        raise ConfigError("need at least one agent and one strategy per agent")
    if not 1 <= m <= MAX_MEMORY:
        raise ConfigError(f"memory m={m} outside supported range 1..{MAX_MEMORY}")
    r = space_size(m, space)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.integers(0, r, size=(n_agents, strategies_per_agent))
    draws.sort(axis=1)
    tuples, counts = np.unique(draws, axis=0, return_counts=True)
    return QuenchedDisorder(
        m=m,
        strategies_per_agent=strategies_per_agent,
        n_agents=n_agents,
        space=space,
        tuples=tuples.astype(np.int64),
        multiplicities=counts.astype(np.int64),
    )


def strategy_counts(disorder: QuenchedDisorder) -> np.ndarray:
    """Per-strategy representation count over all agent slots.

    For S=2 this is the row-plus-column sum of the count tensor, so a
    doubled diagonal: an agent holding the same strategy twice contributes
    2 to that strategy.  Always sums to S*N.
    """
    if disorder.strategies_per_agent != 2:
        raise ConfigError("strategy_counts is defined for S=2 disorders")
    return slot_counts(disorder)


def slot_counts(disorder: QuenchedDisorder) -> np.ndarray:
    """Multiplicity of each strategy over all S*N agent slots (any S)."""
    counts = np.zeros(disorder.n_strategies, dtype=np.int64)
    for tup, c in zip(disorder.tuples, disorder.multiplicities):
        for k in tup:
            counts[k] += c
    return counts


def save_disorder(disorder: QuenchedDisorder, path) -> None:
    """Plain-text tensor dump: header line, then one tensor row per line."""
    if disorder.strategies_per_agent != 2:
        raise ConfigError("text serialization covers S=2 disorders")
    omega = disorder.dense()
    with open(path, "w") as fh:
        fh.write(
            f"omega m={disorder.m} S={disorder.strategies_per_agent} "
            f"N={disorder.n_agents}\n"
        )
        for row in omega:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def load_disorder(path, space: str = "reduced") -> QuenchedDisorder:
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "omega":
            raise ConfigError(f"{path}: not a disorder tensor file")
        try:
            fields = dict(part.split("=") for part in header[1:])
            m, s, n = int(fields["m"]), int(fields["S"]), int(fields["N"])
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path}: malformed header") from exc
        omega = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    r = space_size(m, space)
    if omega.shape != (r,) * s:
        raise ConfigError(f"{path}: tensor shape {omega.shape} does not match m={m}, S={s}")
    disorder = disorder_from_dense(omega, m, space)
    if disorder.n_agents != n:
        raise ConfigError(f"{path}: tensor sums to {disorder.n_agents}, header says N={n}")
    return disorder
