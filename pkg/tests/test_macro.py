import pytest

from ebdevs import Atomic, Coupled, MacroAccess, MacroQuery, MacroState, initialize
from ebdevs.errors import MacroAccessError, QueryError, SimulationError
from ebdevs.macro import deliver_yup, query_down
from ebdevs.models.culture import CultureMacro
from ebdevs.models.epidemic import I, QUARANTINE_CONDITION, S, SirMacro
from ebdevs.models.segregation import GREEN, HAPPINESS, RED, SegregationMacro
from ebdevs.models.sugarscape import GINI, SugarscapeMacro

from minimal import Recorder


class Sequence(MacroState):
    """Keeps the list of all batches, like s_g1 -> s_g2 -> ..."""

    def __init__(self):
        super().__init__(["s_g1"])

    def delta_g(self, elapsed, x_b_micro, parent_view):
        self.s_g = self.s_g + [f"s_g{len(self.s_g) + 1}"]
        self.last_batch = (elapsed, x_b_micro, parent_view)
        return None


def test_first_global_transition():
    m = Sequence()
    y = deliver_yup(m, 2.0, ["y_up1"])
    assert y is None
    assert m.s_g == ["s_g1", "s_g2"]
    assert m.last_batch == (2.0, ["y_up1"], None)
    assert m.last_global_time == 2.0


def test_culture_batch_updates_map():
    m = CultureMacro(5, 5)
    deliver_yup(m, 0.0, [(7, (1, 2, 3, 4, 5))])
    assert m.s_g["models_cultures"] == {7: (1, 2, 3, 4, 5)}
    assert [m.counts[f][f + 1] for f in range(5)] == [1] * 5


def test_identity_global_transition():
    m = MacroState({"k": 1})
    assert deliver_yup(m, 1.0, [object()]) is None
    assert m.s_g == {"k": 1}


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        deliver_yup(MacroState(), 0.0, [])


def test_failing_global_transition_reports_model_and_time():
    class Boom(MacroState):
        def delta_g(self, elapsed, x_b_micro, parent_view):
            raise RuntimeError("boom")

    class Up(Atomic):
        def time_advance(self):
            return 1.5

        def delta_int(self, macro):
            self.send_up(1)

    root = Coupled("shell", Boom())
    root.add(Up("u"))
    with pytest.raises(SimulationError, match=r"shell.*t=1\.5"):
        initialize(root).step()


def test_segregation_happy_among_own_colour():
    m = SegregationMacro(3, 0.5)
    for cell in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        m.place(cell, RED)
    assert query_down(m, MacroQuery(HAPPINESS, ((1, 1), RED))) is True
    assert query_down(m, MacroQuery(HAPPINESS, ((1, 1), GREEN))) is False


def test_sugarscape_gini_of_equal_wealth():
    m = SugarscapeMacro([[0]], 1.0)
    m.s_g["wealth"].update({i: 10 for i in range(4)})
    assert query_down(m, MacroQuery(GINI)) == 0.0


def test_quarantine_query():
    states = {i: (I if i < 20 else S) for i in range(100)}
    m = SirMacro({i: 0 for i in range(100)}, states, {"QT": 0.15, "QA": 1.0, "beta": 3.0, "gamma": 1.0})
    assert query_down(m, MacroQuery(QUARANTINE_CONDITION)) is True


def test_unknown_property():
    with pytest.raises(QueryError):
        query_down(Recorder(), MacroQuery("NOPE"))


def test_access_only_open_during_transitions():
    acc = MacroAccess(Recorder())
    with pytest.raises(MacroAccessError):
        acc("COUNT")
    acc._open = True
    assert acc("COUNT") == 0
    with pytest.raises(QueryError):
        acc("NOPE")
    assert MacroAccess(None)._open is False


def test_query_without_macro():
    class Asker(Atomic):
        def time_advance(self):
            return 1.0

        def delta_int(self, macro):
            macro("COUNT")

    root = Coupled("top")
    root.add(Asker("a"))
    with pytest.raises(QueryError):
        initialize(root).step()


def test_request_needs_binding():
    with pytest.raises(SimulationError):
        MacroState().request(None)
