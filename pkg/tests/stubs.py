"""Deterministic stand-ins for random streams and macro access."""


class FixedStream:
    """Returns ``u`` for every uniform draw and the first item for every choice."""

    def __init__(self, u=0.0, exp=1.0):
        self.u = u
        self.exp = exp

    def uniform(self):
        return self.u

    def choice(self, seq):
        return seq[0]

    def exponential(self, mean):
        return self.exp * mean

    def randint(self, low, high):
        return low


class Answers:
    """Macro access that answers from a dict and records the queries."""

    def __init__(self, **answers):
        self.answers = answers
        self.asked = []

    def __call__(self, prop, *params):
        self.asked.append((prop, params))
        value = self.answers[prop]
        return value(*params) if callable(value) else value
