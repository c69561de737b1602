"""Session timestamps: monotonic-clock deltas anchored once to the wall
clock, so mid-run wall-clock steps cannot break the age math."""

from __future__ import annotations

import time


class SessionClock:
    """Nanosecond timestamps that advance with the monotonic clock from a
    single wall-clock anchor taken at construction."""

    def __init__(self, bias_ns: int = 0):
        # bias_ns lets tests inject a known clock offset
        self._anchor_wall = time.time_ns()
        self._anchor_mono = time.monotonic_ns()
        self._bias = bias_ns

    def now_ns(self) -> int:
        return self._anchor_wall + (time.monotonic_ns() - self._anchor_mono) + self._bias


# Components created in the same process share one anchor, so in-process
# loopback experiments see a consistent (zero-offset) timebase.
DEFAULT_CLOCK = SessionClock()
