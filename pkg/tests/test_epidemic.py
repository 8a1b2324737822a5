import math
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebdevs import RngStream, WeightedPool, initialize
from ebdevs.errors import ConfigurationError, ParameterError
from ebdevs.kernel import Direction, Message, PortRef
from ebdevs.models import epidemic
from ebdevs.models.epidemic import (
    INFINITY,
    QUARANTINE_CONDITION,
    I,
    OdeState,
    R,
    S,
    SirAgent,
    initial_ode_state,
    integrate_ode,
    ode_derivatives,
    quarantine_condition,
    reveal_edges,
    sir_time_advance,
)

from stubs import Answers

DRAWS = 100_000


# edge reveal ------------------------------------------------------------------


def test_no_half_edges_no_edges():
    pool = WeightedPool({"x": 0, "a": 1, "b": 3})
    assert reveal_edges(pool, "x", RngStream(0)) == []
    assert pool.total == 4


def test_partner_chosen_by_free_degree():
    r = RngStream(1)
    hits = 0
    for _ in range(DRAWS):
        pool = WeightedPool({"x": 1, "a": 1, "b": 3})
        hits += reveal_edges(pool, "x", r) == ["b"]
    assert abs(hits / DRAWS - 0.75) <= 0.01


def test_exhausting_the_pool():
    pool = WeightedPool({"x": 2, "a": 1, "b": 1})
    assert sorted(reveal_edges(pool, "x", RngStream(2))) == ["a", "b"]
    assert pool.total == 0


def test_more_half_edges_than_partners():
    pool = WeightedPool({"x": 5, "a": 2})
    assert reveal_edges(pool, "x", RngStream(3)) == ["a"]
    assert pool.weight("x") == 4 and pool.weight("a") == 1


@settings(max_examples=50)
@given(st.lists(st.integers(0, 6), min_size=2, max_size=30), st.integers(0, 2**32))
def test_each_edge_consumes_two_half_edges(free, seed):
    pool = WeightedPool(dict(enumerate(free)))
    r = RngStream(seed)
    total = pool.total
    for node in range(len(free)):
        got = reveal_edges(pool, node, r)
        assert len(set(got)) == len(got) and node not in got
        assert pool.total == total - 2 * len(got)
        total = pool.total


# exponential race ---------------------------------------------------------------


def test_time_advance_of_passive_compartments():
    assert sir_time_advance(R, 3, 3.0, 1.0, RngStream(0)) == (INFINITY, False)
    assert sir_time_advance(S, 3, 3.0, 1.0, RngStream(0)) == (INFINITY, False)


def test_recovery_probability_with_two_susceptibles():
    r = RngStream(4)
    recs = [sir_time_advance(I, 2, 3.0, 1.0, r) for _ in range(DRAWS)]
    assert abs(sum(rec for _, rec in recs) / DRAWS - 1 / 7) <= 0.01
    assert statistics.fmean(t for t, _ in recs) == pytest.approx(1 / 7, rel=0.02)


def test_no_susceptibles_always_recover():
    r = RngStream(5)
    assert all(sir_time_advance(I, 0, 3.0, 1.0, r)[1] for _ in range(1000))


# quarantine ---------------------------------------------------------------------


def test_quarantine_condition():
    assert not quarantine_condition({I: 0}, 100, 0.0)
    assert quarantine_condition({I: 20}, 100, 0.15)
    assert not quarantine_condition({I: 100}, 100, 1.0)


def infect_message():
    return Message(PortRef(9, "n0", Direction.OUT), ("infect", 9))


def infection_rate(quarantine, qa, trials=DRAWS):
    hits = 0
    macro = Answers(**{QUARANTINE_CONDITION: quarantine})
    a = SirAgent(0, 0, S, qa=qa)
    a.rng = RngStream(6)
    for _ in range(trials):
        a.compartment = S
        a.delta_ext(0.1, [infect_message()], macro)
        hits += a.compartment == I
        a.take_yup()
    return hits / trials


def test_infection_without_quarantine():
    assert infection_rate(False, 1.0, 1000) == 1.0


def test_full_acceptance_blocks_infection():
    assert infection_rate(True, 1.0, 1000) == 0.0


def test_half_acceptance_is_a_coin():
    assert abs(infection_rate(True, 0.5) - 0.5) <= 0.01


def test_infect_ignored_after_infection():
    a = SirAgent(0, 0, R)
    a.delta_ext(0.1, [infect_message()], Answers(**{QUARANTINE_CONDITION: False}))
    assert a.compartment == R
    assert a.take_yup() is None


def test_new_neighbour_gets_a_reply():
    a = SirAgent(0, 3, S)
    a.delta_ext(0.0, [Message(PortRef(5, "out", Direction.OUT), ("state", 5, I))], Answers())
    assert a.neighbours == {5: I}
    assert a.free_degree == 2
    assert a.share_state and a.time_advance() == 0.0
    assert a.output() == {"out": ("state", 0, S)}


# reference ODE ------------------------------------------------------------------


def test_disease_free_derivatives():
    d = ode_derivatives(OdeState(0.7, 0.2, 0.5, 0.0, 8.0), 3.0, 1.0)
    assert (d.alpha, d.p_S, d.p_I) == (0.0, 0.0, 0.0)
    assert d.I == pytest.approx(-0.2)


def test_initial_growth_rate():
    eps = 1e-3
    d = ode_derivatives(OdeState(1.0, eps, 1 - eps, eps, 8.0), 3.0, 1.0)
    assert d.I == pytest.approx(23 * eps, rel=1e-12)


def test_no_contagion_pure_decay():
    d = ode_derivatives(OdeState(0.9, 0.3, 0.6, 0.1, 8.0), 0.0, 2.0)
    assert d.alpha == 0.0
    assert d.I == pytest.approx(-0.6)


def test_alpha_must_be_positive():
    with pytest.raises(ParameterError):
        ode_derivatives(OdeState(0.0, 0.1, 0.5, 0.1, 8.0), 3.0, 1.0)


def test_closed_form_decay():
    s0 = OdeState(1.0, 0.01, 0.99, 0.01, 8.0)
    grid = [0.5 * k for k in range(9)]
    out = integrate_ode(s0, 0.0, 1.0, 4.0, sample_times=grid)
    for t, v in out["I_frac"].points:
        assert abs(v - 0.01 * math.exp(-t)) < 1e-6


def test_fast_recovery_leaves_susceptibles():
    s0 = initial_ode_state(1000, 8.0)
    out = integrate_ode(s0, 3.0, 200.0, 1.0)
    assert out["S_frac"].values[-1] == pytest.approx(1.0, abs=1e-3)


def test_step_halving():
    s0 = initial_ode_state(1000, 8.0)
    grid = [0.02 * k for k in range(201)]
    a = integrate_ode(s0, 3.0, 1.0, 4.0, dt=1e-3, sample_times=grid)
    b = integrate_ode(s0, 3.0, 1.0, 4.0, dt=5e-4, sample_times=grid)
    for key in a:
        assert max(abs(x - y) for x, y in zip(a[key].values, b[key].values)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(0.5, 3.0), st.floats(2.0, 10.0))
def test_ode_trajectory_invariants(beta, gamma, lam):
    s = initial_ode_state(500, lam)
    prev = s.alpha
    for _ in range(3000):
        s = epidemic.rk4_step(s, beta, gamma, 1e-3)
        assert s.alpha <= prev + 1e-15
        assert s.p_S + s.p_I <= 1 + 1e-9
        prev = s.alpha


# whole model --------------------------------------------------------------------


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([(1.0, 1.0), (0.05, 0.5)]))
def test_population_and_compartment_order(seed, quarantine):
    qt, qa = quarantine
    root = epidemic.build({"N": 200, "QT": qt, "QA": qa}, seed)
    sim = initialize(root)
    m = root.macro
    history = {i: [a.compartment] for i, a in root.components.items()}
    free = {i: a.free_degree for i, a in root.components.items()}
    rank = {S: 0, I: 1, R: 2}
    while sim.clock < 3.0 and sim.next_time() < INFINITY:
        sim.step()
        assert sum(m.s_g["counts"].values()) == 200
        for i, a in root.components.items():
            assert rank[a.compartment] >= rank[history[i][-1]]
            history[i].append(a.compartment)
            assert a.free_degree <= free[i]
            free[i] = a.free_degree
    assert {i: a.compartment for i, a in root.components.items()} == m.s_g["agent_states"]


def test_epidemic_dies_out():
    res = epidemic.run({"N": 300}, seed=1, t_end=60)
    assert res.final["I_frac"] == 0.0
    assert res.final["S_frac"] + res.final["R_frac"] == pytest.approx(1.0)


def test_partners_met_through_edges_are_size_biased():
    # initial half-edge counts of partners on the first revealed edges
    degrees = []
    for seed in range(30):
        root = epidemic.build({"N": 1000}, seed)
        stream = RngStream(seed, ("build", "epidemic"))
        free0 = {i: stream.poisson(8.0) for i in range(1000)}
        sim = initialize(root)
        while len(root.macro.edges) < 60 and sim.next_time() < INFINITY:
            sim.step()
        degrees += [free0[b] for _, b in root.macro.edges[:60]]
    assert abs(statistics.fmean(degrees) - 9.0) <= 0.5


def test_params_checked():
    with pytest.raises(ConfigurationError):
        epidemic.build({"QA": 2.0})
    with pytest.raises(ConfigurationError):
        epidemic.build({"gamma": 0.0})
