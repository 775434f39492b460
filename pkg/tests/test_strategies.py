import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thgames import strategies as strat
from thgames.errors import ConfigError

# the canonical eight tables at m=2, one strategy per row, histories 0..3
GOLDEN_M2 = np.array([
    [-1, -1, -1, -1],
    [-1, -1, +1, +1],
    [-1, +1, -1, +1],
    [-1, +1, +1, -1],
    [+1, -1, -1, +1],
    [+1, -1, +1, -1],
    [+1, +1, -1, -1],
    [+1, +1, +1, +1],
], dtype=np.int8)

# the worked 8x8 upper-triangular assignment tensor for N=31, S=2
FIXTURE_OMEGA = np.array([
    [1, 2, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 3, 3, 1, 1],
    [0, 0, 2, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 2, 1],
    [0, 0, 0, 0, 0, 2, 2, 1],
    [0, 0, 0, 0, 0, 0, 2, 1],
    [0, 0, 0, 0, 0, 0, 0, 0],
], dtype=np.int64)


def fixture_disorder():
    return strat.disorder_from_dense(FIXTURE_OMEGA, m=2)


def test_reduced_space_m2_matches_golden_table():
    space = strat.build_reduced_strategy_space(2)
    assert np.array_equal(space.table, GOLDEN_M2)


def test_reduced_space_m1_negation_closure_and_distances():
    space = strat.build_reduced_strategy_space(1)
    assert space.size == 4
    for k in range(4):
        assert np.array_equal(space[k], -space[space.negation_index(k)])
    dists = {
        int(np.sum(space[i] != space[j]))
        for i in range(4) for j in range(i + 1, 4)
    }
    assert dists <= {1, 2}


def test_reduced_space_m3_pairwise_hamming_exhaustive():
    table = strat.build_reduced_strategy_space(3).table
    for i in range(16):
        for j in range(i + 1, 16):
            assert int(np.sum(table[i] != table[j])) in (4, 8)


@pytest.mark.parametrize("m", range(1, 9))
def test_reduced_space_negation_pairing(m):
    space = strat.build_reduced_strategy_space(m)
    r = space.size
    assert r == 2 ** (m + 1)
    for k in range(r):
        assert np.array_equal(space[k], -space[r - 1 - k])


def test_memory_out_of_range_rejected():
    with pytest.raises(ConfigError):
        strat.build_reduced_strategy_space(0)
    with pytest.raises(ConfigError):
        strat.build_reduced_strategy_space(15)


def test_row_access_matches_materialized_table():
    space = strat.build_reduced_strategy_space(4)
    for k in (0, 3, 17, 31):
        assert np.array_equal(strat.reduced_strategy_row(4, k), space[k])


def test_full_space_rows():
    assert np.array_equal(strat.full_strategy_row(2, 0), [-1, -1, -1, -1])
    assert np.array_equal(strat.full_strategy_row(2, 0b1010), [1, -1, 1, -1])
    with pytest.raises(ConfigError):
        strat.space_size(5, "full")


def test_sampling_totals_and_determinism():
    d1 = strat.sample_quenched_disorder(31, 2, 2, seed=11)
    d2 = strat.sample_quenched_disorder(31, 2, 2, seed=11)
    assert d1.multiplicities.sum() == 31
    assert np.array_equal(d1.tuples, d2.tuples)
    assert np.array_equal(d1.multiplicities, d2.multiplicities)
    omega = d1.dense()
    assert np.array_equal(omega, np.triu(omega))


def test_single_agent_single_strategy():
    d = strat.sample_quenched_disorder(1, 1, 2, seed=0)
    omega = d.dense()
    assert omega.sum() == 1
    assert np.count_nonzero(omega) == 1


def test_sampling_uniform_over_unordered_pairs():
    n = 10_000
    d = strat.sample_quenched_disorder(n, 2, 2, seed=99)
    omega = d.dense()
    # expected multinomial counts: 8 diagonal cells at n/64, 28 off at n/32
    expected = np.zeros((8, 8))
    for i in range(8):
        for j in range(i, 8):
            expected[i, j] = n / 64 if i == j else n / 32
    mask = expected > 0
    chi2 = float((((omega - expected) ** 2)[mask] / expected[mask]).sum())
    dof = int(mask.sum()) - 1
    assert abs(chi2 - dof) <= 4 * np.sqrt(2 * dof)


def test_strategy_counts_fixture_tensor():
    kappa = strat.strategy_counts(fixture_disorder())
    assert kappa.tolist() == [6, 10, 5, 4, 11, 11, 10, 5]
    assert kappa.sum() == 62


def test_strategy_counts_diagonal_counts_twice():
    omega = np.zeros((8, 8), dtype=np.int64)
    omega[0, 0] = 31
    kappa = strat.strategy_counts(strat.disorder_from_dense(omega, m=2))
    assert kappa[0] == 62
    assert kappa[1:].sum() == 0


def test_disorder_text_roundtrip(tmp_path):
    d = strat.sample_quenched_disorder(31, 2, 2, seed=4)
    path = tmp_path / "omega.txt"
    strat.save_disorder(d, path)
    header = path.read_text().splitlines()[0]
    assert header == "omega m=2 S=2 N=31"
    loaded = strat.load_disorder(path)
    assert np.array_equal(loaded.dense(), d.dense())
    assert loaded.n_agents == 31


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a tensor\n1 2 3\n")
    with pytest.raises(ConfigError):
        strat.load_disorder(path)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=200),
    m=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=2 ** 31),
)
def test_sampled_disorder_conservation(n, m, seed):
    d = strat.sample_quenched_disorder(n, 2, m, seed=seed)
    assert d.multiplicities.sum() == n
    assert strat.strategy_counts(d).sum() == 2 * n
    again = strat.sample_quenched_disorder(n, 2, m, seed=seed)
    assert np.array_equal(d.tuples, again.tuples)
