import itertools
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebdevs import RngStream, WeightedPool, initialize
from ebdevs.errors import ConfigurationError
from ebdevs.models import network
from ebdevs.models.network import sample_attach_targets

DRAWS = 100_000


def set_probability(weights: dict, wanted: set) -> Fraction:
    """P(two sequential draws without replacement give ``wanted``), by enumeration."""
    total = sum(weights.values())
    p = Fraction(0)
    for a, b in itertools.permutations(weights, 2):
        if {a, b} == wanted:
            p += Fraction(weights[a], total) * Fraction(weights[b], total - weights[a])
    return p


def frequency(weights, connect_to, event, seed):
    pool = WeightedPool(weights)
    r = RngStream(seed)
    return sum(event(sample_attach_targets(pool, r, connect_to)) for _ in range(DRAWS)) / DRAWS


def test_seed_pair_equally_likely():
    assert abs(frequency({0: 1, 1: 1}, 1, lambda t: t == [0], 1) - 0.5) <= 0.01


def test_degree_proportional_single_target():
    assert abs(frequency({0: 3, 1: 1}, 1, lambda t: t == [0], 2) - 0.75) <= 0.01


def test_two_targets_match_enumeration():
    weights = {0: 2, 1: 1, 2: 1}
    # 2/4*1/2 + 1/4*2/3
    exact = set_probability(weights, {0, 1})
    assert exact == Fraction(5, 12)
    assert abs(frequency(weights, 2, lambda t: set(t) == {0, 1}, 3) - float(exact)) <= 0.01


def test_small_pool_attaches_to_everyone():
    assert sorted(sample_attach_targets(WeightedPool({0: 1, 1: 1}), RngStream(0), 3)) == [0, 1]


def graph_of(root):
    s_g = root.macro.s_g
    return s_g["nodes_degree"], s_g["topology"]


def is_tree(n_nodes, edges):
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return len(edges) == n_nodes - 1


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 60), st.integers(0, 2**32))
def test_growth_counts(m, k, seed):
    root = network.build({"connect_to": m}, seed)
    sim = initialize(root)
    for t in range(k + 1):
        sim.run_until(float(t))
        deg, edges = graph_of(root)
        assert len(deg) == t + 2
        assert sum(deg.values()) == 2 * len(edges)
        assert len(root.components) == len(deg)
        assert Counter(x for e in edges for x in e) == Counter({i: d for i, d in deg.items() if d})
        assert len({frozenset(e) for e in edges}) == len(edges)
    if m == 1:
        assert len(edges) == k + 1
        assert sum(deg.values()) == 2 * (k + 1)
        assert is_tree(len(deg), edges)


def test_degree_sum_for_two_targets():
    # node 2 attaches to both seed nodes; after that every node brings two edges
    root = network.build({"connect_to": 2}, 0)
    initialize(root).run_until(10.0)
    deg, edges = graph_of(root)
    assert sum(deg.values()) == 2 * (1 + 2 * 10)


def test_couplings_follow_topology():
    root = network.build({"connect_to": 1}, 4)
    initialize(root).run_until(20.0)
    _, edges = graph_of(root)
    links = {(s.model_id, d.model_id) for s, d in root.couplings()}
    assert links == set(edges)


def test_connect_to_range():
    with pytest.raises(ConfigurationError):
        network.build({"connect_to": 4})


def test_run_final_counts():
    res = network.run({"connect_to": 1}, seed=0, t_end=50)
    assert res.final["nodes"] == 52
    assert res.final["edges"] == 51
    assert res.series["average_degree"].values[-1] == pytest.approx(2 * 51 / 52)
