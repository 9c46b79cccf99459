from fractions import Fraction

import numpy as np
import pytest

from partcons import Constraint, Partition, PartitionError, SampleSpec, UniverseSpec, sample, universe
from partcons.partition import bell_number, count_partitions_into_k
from partcons.universe import (
    enumerate_universe,
    iter_rgs,
    parse_export,
    sample_from,
    sample_indices,
    sample_size_for,
    trial_rng,
)

from conftest import blocks_of, brute_partitions


@pytest.mark.parametrize("n", range(1, 8))
def test_full_universe_is_every_partition_once(n):
    u = universe(UniverseSpec(n))
    assert len(u) == bell_number(n)
    assert {blocks_of(p) for p in u} == set(brute_partitions(n))
    assert list(u.members) == sorted(u.members)  # lexicographic


def test_published_universe_counts():
    assert [len(universe(UniverseSpec(n))) for n in range(4, 9)] == [15, 52, 203, 877, 4140]
    assert [len(enumerate_universe(n, "kmax", k_max=4)) for n in (6, 7)] == [187, 715]
    assert [len(enumerate_universe(n, "structured")) for n in range(4, 8)] == [5, 15, 52, 203]
    assert [len(enumerate_universe(n, "structured+ts")) for n in range(4, 9)] == [6, 16, 53, 204, 878]


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 8) for k in range(1, 5)])
def test_kmax_counts_and_membership(n, k):
    u = enumerate_universe(n, Constraint.KMAX, k_max=k)
    assert len(u) == sum(count_partitions_into_k(n, j) for j in range(1, min(n, k) + 1))
    assert all(p.k <= k for p in u)


@pytest.mark.parametrize("n", range(3, 7))
def test_structured_universe(n):
    u = enumerate_universe(n, Constraint.STRUCTURED, pair=(3, 1))
    assert u.spec.pair == (1, 3)
    assert all(p.together(1, 3) for p in u)
    # merging 1 and 3 leaves a free partition of n-1 elements
    assert len(u) == bell_number(n - 1)
    assert Partition.total_separation(n) not in u
    v = enumerate_universe(n, Constraint.STRUCTURED_PLUS_TOTALSEP)
    assert set(v) == set(u) | {Partition.total_separation(n)}


def test_spec_validation_and_parse():
    with pytest.raises(ValueError):
        UniverseSpec(0)
    with pytest.raises(ValueError):
        UniverseSpec(4, Constraint.KMAX)
    with pytest.raises(ValueError):
        UniverseSpec(4, Constraint.STRUCTURED, pair=(2, 2))
    with pytest.raises(ValueError):
        UniverseSpec(4, Constraint.STRUCTURED, pair=(1, 5))
    assert UniverseSpec.parse(5, "kmax(3)") == UniverseSpec(5, Constraint.KMAX, k_max=3)
    assert UniverseSpec.parse(5, "kmax:3") == UniverseSpec(5, Constraint.KMAX, k_max=3)
    assert UniverseSpec.parse(5, "structured(2,4)").pair == (2, 4)
    assert UniverseSpec.parse(5, "structured+ts").pair == (1, 3)
    assert str(UniverseSpec.parse(5, "structured+ts(1,3)")) == "structured+ts(1,3)"
    with pytest.raises(ValueError):
        UniverseSpec.parse(5, "everything")


def test_export_round_trip():
    u = enumerate_universe(5, "kmax", k_max=3)
    text = u.export()
    assert text.splitlines()[0] == "# n=5 constraint=kmax(3) count=41"
    assert parse_export(text) == list(u)


def test_embedding_and_matrix_are_consistent():
    u = universe(UniverseSpec(5))
    assert u.embedding.shape == (52, 10)
    assert u.uncd_matrix.shape == (52, 52)
    assert u.uncd_matrix[u.index[Partition.all_in_one(5)], u.index[Partition.total_separation(5)]] == 10


# --- sampling


def test_sample_size_rounding():
    # halves go to the even neighbour
    assert sample_size_for(Fraction(1, 2), 5) == 2
    assert sample_size_for(Fraction(1, 2), 15) == 8
    assert sample_size_for(Fraction(1, 10), 15) == 2
    assert sample_size_for(0.1, 52) == 5
    assert sample_size_for(Fraction(1, 1000), 52) == 1
    assert sample_size_for(1, 203) == 203
    # with a forced member: 1 + round(f * (m - 1))
    assert sample_size_for(Fraction(1, 2), 52, force_include=True) == 27
    assert sample_size_for(Fraction(1, 10), 15, force_include=True) == 2
    assert sample_size_for(1, 53, force_include=True) == 53
    with pytest.raises(ValueError):
        sample_size_for(0, 10)
    with pytest.raises(ValueError):
        sample_size_for(Fraction(3, 2), 10)


def test_trial_streams_are_reproducible_and_distinct():
    a = trial_rng(42, 3).integers(0, 2**32, 4)
    assert (a == trial_rng(42, 3).integers(0, 2**32, 4)).all()
    assert not (a == trial_rng(42, 4).integers(0, 2**32, 4)).all()
    assert not (a == trial_rng(43, 3).integers(0, 2**32, 4)).all()


def test_sample_without_replacement():
    u = universe(UniverseSpec(5))
    s = sample(SampleSpec(u, 10, seed=7), trial=0)
    assert len(s) == len(set(s)) == 10
    assert all(p in u for p in s)
    assert s == sample(SampleSpec(u, 10, seed=7), trial=0)


def test_forced_member_always_present():
    u = universe(UniverseSpec(5))
    ts = Partition.total_separation(5)
    for t in range(30):
        s = sample(SampleSpec(u, 3, seed=1, force_include=ts), trial=t)
        assert ts in s and len(set(s)) == 3


def test_unordered_indices_put_the_forced_member_first():
    rng = np.random.default_rng(0)
    idx = sample_indices(20, 6, rng, force=19, ordered=False)
    assert idx[0] == 19 and len(set(idx.tolist())) == 6


def test_sampling_is_roughly_uniform():
    counts = np.zeros(15)
    for t in range(3000):
        counts[sample_indices(15, 3, trial_rng(5, t))] += 1
    expected = 3000 * 3 / 15
    assert np.abs(counts - expected).max() < 5 * np.sqrt(expected)


def test_sample_spec_errors():
    u = universe(UniverseSpec(4))
    with pytest.raises(ValueError):
        SampleSpec(u, 16)
    with pytest.raises(ValueError):
        SampleSpec(u, 0)
    with pytest.raises(PartitionError):
        SampleSpec(universe(UniverseSpec(4, Constraint.STRUCTURED)), 2, force_include=Partition.total_separation(4))
    assert len(SampleSpec(u, 30, replace=True).universe) == 15


def test_sample_from_list():
    parts = [Partition(r) for r in iter_rgs(4)]
    s = sample_from(parts, 5, seed=3)
    assert len(set(s)) == 5 and s == sample_from(parts, 5, seed=3)
