import math
import statistics
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebdevs import RngStream, WeightedPool, derive_seed
from ebdevs.errors import ParameterError, SamplingError
from ebdevs.rng import weighted_sample_without_replacement

from oracles import POOLS, exact_sequence_probabilities

DRAWS = 100_000


def test_exact_enumeration_oracle_by_hand():
    probs = exact_sequence_probabilities({"a": 1, "b": 2, "c": 3}, 2)
    assert sum(p for s, p in probs.items() if s[0] == "c") == Fraction(1, 2)
    # b then a: 2/6 * 1/4
    assert probs[("b", "a")] == Fraction(1, 12)
    assert sum(probs.values()) == 1


# streams ------------------------------------------------------------------


def test_same_seed_same_draws():
    a = RngStream(42, ("model", 1))
    b = RngStream(42, ("model", 1))
    assert [a.uniform() for _ in range(10)] == [b.uniform() for _ in range(10)]


def test_distinct_streams_differ():
    a = RngStream(42, ("model", 1))
    b = RngStream(42, ("model", 2))
    assert a.uniform() != b.uniform()


def test_derived_seeds_are_64_bit_and_key_sensitive():
    s = derive_seed(7, "run", 0, 0)
    assert 0 <= s < 2**64
    assert s != derive_seed(7, "run", 0, 1)
    assert s == derive_seed(7, "run", 0, 0)


def test_uniform_mean():
    r = RngStream(1)
    mean = statistics.fmean(r.uniform() for _ in range(DRAWS))
    assert 0.497 <= mean <= 0.503


def test_exponential_mean():
    r = RngStream(2)
    mean = statistics.fmean(r.exponential(0.5) for _ in range(DRAWS))
    assert 0.49 <= mean <= 0.51


def test_exponential_at_zero_uniform():
    class Zero(RngStream):
        __slots__ = ()

        def uniform(self):
            return 0.0

    assert Zero(0).exponential(3.0) == 0.0


def test_exponential_sir_rate():
    r = RngStream(3)
    mean = statistics.fmean(r.exponential(1 / (2 * 3 + 1)) for _ in range(DRAWS))
    assert mean == pytest.approx(1 / 7, rel=0.02)


def test_exponential_rejects_bad_mean():
    with pytest.raises(ParameterError):
        RngStream(0).exponential(0.0)


def test_poisson_moments():
    r = RngStream(4)
    xs = [r.poisson(8.0) for _ in range(DRAWS)]
    assert 7.9 <= statistics.fmean(xs) <= 8.1
    assert 7.7 <= statistics.pvariance(xs) <= 8.3


def test_poisson_tiny_mean_mostly_zero():
    r = RngStream(5)
    zeros = sum(r.poisson(1e-4) == 0 for _ in range(10_000))
    assert zeros >= 9980


def test_poisson_large_mean_does_not_underflow():
    r = RngStream(6)
    mean = statistics.fmean(r.poisson(2000.0) for _ in range(2000))
    assert abs(mean - 2000) < 5


def test_poisson_rejects_bad_mean():
    with pytest.raises(ParameterError):
        RngStream(0).poisson(-1.0)


@given(st.integers(0, 2**64 - 1), st.integers(-5, 5), st.integers(0, 10))
def test_randint_stays_in_range(seed, low, width):
    r = RngStream(seed)
    for _ in range(20):
        assert low <= r.randint(low, low + width) <= low + width


# weighted sampling -----------------------------------------------------------


def test_two_item_pool_frequency():
    r = RngStream(10)
    hits = sum(weighted_sample_without_replacement(r, {"a": 1, "b": 3}, 1) == ["b"] for _ in range(DRAWS))
    assert abs(hits / DRAWS - 0.75) <= 0.01


def test_exhaustive_draw_is_permutation():
    r = RngStream(11)
    out = weighted_sample_without_replacement(r, {"a": 1, "b": 1, "c": 1}, 3)
    assert sorted(out) == ["a", "b", "c"]


def test_count_beyond_positive_weights():
    with pytest.raises(SamplingError):
        weighted_sample_without_replacement(RngStream(0), {"a": 1, "b": 0}, 2)


@pytest.mark.parametrize("weights", POOLS[1:4], ids=lambda w: "-".join(f"{k}{v}" for k, v in w.items()))
def test_frequencies_match_exact_enumeration(weights):
    positive = sum(1 for w in weights.values() if w > 0)
    for count in range(1, positive + 1):
        exact = exact_sequence_probabilities(weights, count)
        r = RngStream(12, tuple(weights.items()) + (count,))
        seen = Counter(tuple(weighted_sample_without_replacement(r, weights, count)) for _ in range(DRAWS))
        for seq, p in exact.items():
            assert abs(seen[seq] / DRAWS - float(p)) <= 0.01, (seq, count)
        assert set(seen) <= set(exact)


weights_st = st.dictionaries(st.integers(0, 30), st.integers(0, 20), min_size=1, max_size=30)


@given(weights_st, st.lists(st.tuples(st.integers(0, 30), st.integers(0, 20)), max_size=30))
def test_pool_totals_track_updates(weights, updates):
    pool = WeightedPool(weights)
    mirror = dict(weights)
    for key, w in updates:
        if key in mirror:
            pool.set(key, w)
        else:
            pool.add(key, w)
        mirror[key] = w
    assert pool.total == sum(mirror.values())
    assert pool.positive == sum(1 for w in mirror.values() if w > 0)
    for i in range(len(pool) + 1):
        assert pool._prefix(i) == sum(mirror[k] for k in pool.ids()[:i])


@settings(max_examples=50)
@given(weights_st, st.integers(0, 2**32))
def test_pool_draws_only_positive_and_restores_weights(weights, seed):
    pool = WeightedPool(weights)
    if pool.positive == 0:
        with pytest.raises(SamplingError):
            pool.sample(RngStream(seed))
        return
    before = {k: pool.weight(k) for k in pool.ids()}
    drawn = pool.sample_distinct(RngStream(seed), pool.positive)
    assert len(set(drawn)) == len(drawn) == pool.positive
    assert all(weights[k] > 0 for k in drawn)
    assert {k: pool.weight(k) for k in pool.ids()} == before
    assert math.isclose(pool.total, sum(before.values()))


def test_negative_weight_rejected():
    with pytest.raises(ParameterError):
        WeightedPool({"a": -1})
