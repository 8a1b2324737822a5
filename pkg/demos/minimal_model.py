"""
A four-state atomic model with a macro level
============================================

One atomic model inside one coupled model.  It fires once on its own, then
reacts to two scripted inputs.  The first two transitions send an upward
value, so the coupled model's global transition runs twice.
"""

import io

from ebdevs import INFINITY, Atomic, Coupled, MacroState, Simulator


class FourState(Atomic):
    def __init__(self, model_id="m"):
        super().__init__(model_id, "s1")

    def time_advance(self):
        return 2.0 if self.state == "s1" else INFINITY

    def output(self):
        return {"out": "y1"}

    def delta_int(self, macro):
        self.state = "s2"
        self.send_up("first")

    def delta_ext(self, elapsed, inputs, macro):
        if self.state == "s2":
            self.state = "s3"
            self.send_up("second")
        else:
            self.state = "s4"


class Script(Atomic):
    """Emits ``(time, payload)`` pairs, then goes passive."""

    in_ports = ()

    def __init__(self, model_id, events):
        super().__init__(model_id)
        self.events = list(events)
        self.now = 0.0

    def time_advance(self):
        return self.events[0][0] - self.now if self.events else INFINITY

    def output(self):
        return {"out": self.events[0][1]}

    def delta_int(self, macro):
        self.now = self.events.pop(0)[0]


class Log(MacroState):
    def __init__(self):
        super().__init__({"seen": []})

    def delta_g(self, elapsed, x_b_micro, parent_view):
        self.s_g["seen"].append((self.now, list(x_b_micro)))


# %% build: the script feeds the model at t=3 and t=5
root = Coupled("top", macro=Log())
m = root.add(FourState())
src = root.add(Script("x", [(3.0, "x1"), (5.0, "x2")]))
root.connect((src.id, "out"), (m.id, "in"))

# %% run and look at the event log
log = io.StringIO()
sim = Simulator(root, seed=0, trace=log)
sim.run_until(10.0)
print(log.getvalue())
print("final state:", m.state)
print("global transitions:", root.macro.s_g["seen"])
