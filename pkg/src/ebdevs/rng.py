"""Seeded random streams.

Every atomic model, every macro state and every model builder owns an
independent :class:`RngStream`.  Stream seeds are derived from the master
seed and a stream key with splitmix64, so adding draws to one stream never
shifts another one.  The generator behind a stream is the stdlib Mersenne
Twister, which is fast for the scalar draws the models make.
"""

from __future__ import annotations

import hashlib
import math
import random
from collections.abc import Hashable, Iterable, Mapping, Sequence

from .errors import ParameterError, SamplingError

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stable_hash(key: Hashable) -> int:
    # repr() is stable across processes, hash() is not for str
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *keys: Hashable) -> int:
    """Mix a master seed with a sequence of keys into a 64-bit seed."""
    x = splitmix64(seed & MASK64)
    for key in keys:
        x = splitmix64(x ^ stable_hash(key))
    return x


class RngStream:
    """Deterministic random stream identified by ``(seed, stream_id)``."""

    __slots__ = ("seed", "stream_id", "_rng")

    def __init__(self, seed: int, stream_id: tuple = ()):
        self.seed = seed
        self.stream_id = tuple(stream_id)
        self._rng = random.Random(derive_seed(seed, *self.stream_id))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id!r})"

    def uniform(self) -> float:
        """Uniform real in [0, 1)."""
        return self._rng.random()

    def uniform_range(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], both ends included."""
        if high < low:
            raise ParameterError(f"empty integer range [{low}, {high}]")
        return low + int(self.uniform() * (high - low + 1))

    def choice(self, seq: Sequence):
        if not seq:
            raise SamplingError("choice from an empty sequence")
        return seq[int(self.uniform() * len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.uniform() * (i + 1))
            items[i], items[j] = items[j], items[i]

    def exponential(self, mean: float) -> float:
        """Exponential variate with the given *mean* (inverse CDF)."""
        if not mean > 0:
            raise ParameterError(f"exponential mean must be positive, got {mean}")
        return -mean * math.log(1.0 - self.uniform())

    def poisson(self, lam: float) -> int:
        """Poisson variate by Knuth's multiplication method.

        Large means are split into chunks of at most 500 so that
        ``exp(-lam)`` never underflows.
        """
        if not lam > 0:
            raise ParameterError(f"poisson mean must be positive, got {lam}")
        total = 0
        while lam > 0:
            chunk = min(lam, 500.0)
            lam -= chunk
            limit = math.exp(-chunk)
            k = 0
            p = self.uniform()
            while p > limit:
                k += 1
                p *= self.uniform()
            total += k
        return total


class WeightedPool:
    """Mutable collection of ids with non-negative weights.

    Backed by a Fenwick tree, so updates and draws cost O(log n).  Weights are
    expected to be integers (degrees, half-edge counts); floats work but
    accumulate rounding after many updates.
    """

    def __init__(self, weights: Mapping | Iterable[tuple] | None = None):
        self._ids: list = []
        self._index: dict = {}
        self._w: list[float] = []
        self._tree: list[float] = [0.0]
        self.total = 0.0
        self.positive = 0
        if weights is not None:
            items = weights.items() if isinstance(weights, Mapping) else weights
            for key, w in items:
                self.add(key, w)

    def __len__(self):
        return len(self._ids)

    def __contains__(self, key):
        return key in self._index

    def ids(self) -> list:
        return list(self._ids)

    def weight(self, key) -> float:
        return self._w[self._index[key]]

    def _prefix(self, i: int) -> float:
        s = 0.0
        tree = self._tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def add(self, key, weight: float = 0.0) -> None:
        if weight < 0:
            raise ParameterError(f"negative weight {weight} for {key!r}")
        if key in self._index:
            raise KeyError(f"{key!r} already in pool")
        i = len(self._ids) + 1
        self._index[key] = i - 1
        self._ids.append(key)
        self._w.append(weight)
        self._tree.append(weight + self._prefix(i - 1) - self._prefix(i - (i & -i)))
        self.total += weight
        if weight > 0:
            self.positive += 1

    def _bump(self, pos: int, delta: float) -> None:
        i = pos + 1
        tree = self._tree
        n = len(tree)
        while i < n:
            tree[i] += delta
            i += i & -i

    def set(self, key, weight: float) -> None:
        if weight < 0:
            raise ParameterError(f"negative weight {weight} for {key!r}")
        pos = self._index[key]
        old = self._w[pos]
        if old == weight:
            return
        self._w[pos] = weight
        self._bump(pos, weight - old)
        self.total += weight - old
        self.positive += (weight > 0) - (old > 0)

    def add_to(self, key, delta: float) -> None:
        self.set(key, self._w[self._index[key]] + delta)

    def _find(self, target: float) -> int:
        tree = self._tree
        n = len(tree) - 1
        pos = 0
        step = 1 << n.bit_length()
        while step:
            nxt = pos + step
            if nxt <= n and tree[nxt] <= target:
                pos = nxt
                target -= tree[nxt]
            step >>= 1
        # rounding can push past the last positive weight
        if pos >= n:
            pos = n - 1
        while self._w[pos] <= 0:
            pos -= 1
        return pos

    def sample(self, stream: RngStream):
        """One id drawn with probability weight / total."""
        if self.positive == 0:
            raise SamplingError("no positive weight left in the pool")
        return self._ids[self._find(stream.uniform() * self.total)]

    def sample_distinct(self, stream: RngStream, count: int) -> list:
        """``count`` distinct ids by successive draws without replacement.

        Drawn weights are zeroed during the draw and restored afterwards, so
        the pool is left unchanged.
        """
        if count > self.positive:
            raise SamplingError(
                f"asked for {count} distinct ids, only {self.positive} have positive weight"
            )
        drawn = []
        saved = []
        try:
            for _ in range(count):
                key = self.sample(stream)
                drawn.append(key)
                saved.append(self.weight(key))
                self.set(key, 0.0)
        finally:
            for key, w in zip(drawn, saved):
                self.set(key, w)
        return drawn


def weighted_sample_without_replacement(
    stream: RngStream, weights: Mapping, count: int
) -> list:
    """Draw ``count`` distinct ids, each draw proportional to remaining weight."""
    return WeightedPool(weights).sample_distinct(stream, count)
