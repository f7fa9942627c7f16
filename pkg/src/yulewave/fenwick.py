"""Binary indexed tree over nonnegative integer weights.

Used to pick a generation with probability proportional to its particle
count in O(log G) per draw. A linear-scan sampler with the same inverse-CDF
convention is kept alongside for differential testing.
"""

from __future__ import annotations

import numpy as np


class FenwickTree:
    def __init__(self, weights=()):
        w = np.asarray(weights, dtype=np.int64)
        size = 1
        while size < max(len(w), 1):
            size *= 2
        self._size = size
        self._tree = np.zeros(size + 1, dtype=np.int64)
        self._values = np.zeros(size, dtype=np.int64)
        self._values[: len(w)] = w
        # linear-time build
        self._tree[1:] = self._values
        for i in range(1, size + 1):
            j = i + (i & -i)
            if j <= size:
                self._tree[j] += self._tree[i]

    def __len__(self):
        return self._size

    @property
    def total(self) -> int:
        return int(self._tree[self._size])

    def value(self, index: int) -> int:
        return int(self._values[index])

    def _grow(self, needed: int):
        values = self._values
        new_size = self._size
        while new_size < needed:
            new_size *= 2
        padded = np.zeros(new_size, dtype=np.int64)
        padded[: len(values)] = values
        self.__init__(padded)

    def add(self, index: int, delta: int):
        if index >= self._size:
            self._grow(index + 1)
        self._values[index] += delta
        i = index + 1
        while i <= self._size:
            self._tree[i] += delta
            i += i & -i

    def prefix_sum(self, index: int) -> int:
        """Sum of weights at positions ``0..index`` inclusive."""
        s = 0
        i = min(index + 1, self._size)
        while i > 0:
            s += self._tree[i]
            i -= i & -i
        return int(s)

    def find(self, target: int) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``target``."""
        if not 0 <= target < self.total:
            raise ValueError("target outside [0, total)")
        pos = 0
        step = self._size
        while step:
            nxt = pos + step
            if nxt <= self._size and self._tree[nxt] <= target:
                pos = nxt
                target -= self._tree[nxt]
            step >>= 1
        return pos


def linear_find(weights, target: int) -> int:
    """Reference inverse-CDF lookup by cumulative scan."""
    acc = 0
    for i, w in enumerate(weights):
        acc += int(w)
        if acc > target:
            return i
    raise ValueError("target outside [0, total)")
