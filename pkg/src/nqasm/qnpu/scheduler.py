"""Deterministic discrete-event scheduler."""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Callable

import numpy as np

__all__ = ["Scheduler"]


class Scheduler:
    """Priority queue of callbacks ordered by (time, node id, insertion order).

    The scheduler owns the random state of a run, so a run is a pure
    function of its seed and the scheduled callbacks.  Besides the shared
    generator it hands out keyed streams: a stream depends only on the seed
    and its key, not on how many draws happened before it.
    """

    def __init__(self, seed: int | None = 0):
        self.now = 0.0
        self._root = np.random.SeedSequence(seed)
        self.rng = np.random.default_rng(self._root)
        self._heap: list = []
        self._seq = itertools.count()
        self.observers: list[Callable[[], None]] = []
        self.deadline: float | None = None  # optional guard against endless waits
        self.events = 0

    def schedule(self, delay: float, node_id: int, callback: Callable[[], None]) -> None:
        if delay < 0:
            raise ValueError("cannot schedule in the past")
        heapq.heappush(self._heap, (self.now + delay, node_id, next(self._seq), callback))

    def stream(self, *key: int) -> np.random.Generator:
        """Generator for ``key`` (non-negative ints), independent of draw order."""
        return np.random.default_rng(np.random.SeedSequence(self._root.entropy, spawn_key=(1 << 31, *key)))

    def pending(self) -> int:
        return len(self._heap)

    def step(self) -> bool:
        """Run one event; False when nothing is left (or the deadline passed)."""
        if not self._heap:
            return False
        t, _, _, cb = heapq.heappop(self._heap)
        if self.deadline is not None and t > self.deadline:
            self._heap.clear()
            return False
        self.now = t
        cb()
        self.events += 1
        for obs in self.observers:
            obs()
        return True

    def run(self) -> None:
        while self.step():
            pass
