"""Shared test helpers: independent age oracles (straight from the age
definition, no reuse of package internals) and random trace generation."""

from __future__ import annotations

import numpy as np
import pytest

from aoikit import Trace


def age_at(t, gen_recv, initial_age, observe_start):
    """Direct definition oracle: age(t) = t - max generation time received
    by t, seeded by the initial condition."""
    newest = observe_start - initial_age
    for g, r in gen_recv:
        if r <= t and g > newest:
            newest = g
    return t - newest


def integrate_age(gen_recv, initial_age, observe_start, t0, t1):
    """Exact area under age(t) on [t0, t1]: split at reception instants, each
    piece is linear with slope 1, so the trapezoid rule per piece is exact."""
    cuts = sorted({t0, t1, *(r for _, r in gen_recv if t0 < r < t1)})
    area = 0.0
    for a, b in zip(cuts, cuts[1:]):
        # age is right-continuous at receptions: sample just inside the piece
        lo = age_at(a, [(g, r) for g, r in gen_recv if r <= a], initial_age, observe_start)
        hi = lo + (b - a)
        area += (b - a) * (lo + hi) / 2.0
    return area


def integrate_penalty(f, gen_recv, initial_age, observe_start, t0, t1, pts_per_piece=20001):
    """Numerical quadrature of f(age(t)) on [t0, t1]: dense trapezoid rule on
    each smooth piece between receptions."""
    cuts = sorted({t0, t1, *(r for _, r in gen_recv if t0 < r < t1)})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        newest = age_at(a, [(g, r) for g, r in gen_recv if r <= a], initial_age, observe_start)
        ts = np.linspace(a, b, pts_per_piece)
        ages = newest + (ts - a)
        total += np.trapezoid([f(x) for x in ages], ts)
    return total


def random_trace(rng, n=None, min_delay=0.0, max_delay=3.0, max_gap=2.0):
    """Random valid effective trace: increasing receptions, increasing
    generations, non-negative delays."""
    if n is None:
        n = int(rng.integers(1, 50))
    gaps = rng.uniform(0.01, max_gap, size=n)
    recv = np.cumsum(gaps) + 1.0
    initial_age = float(rng.uniform(max(min_delay, 0.01), max_delay))
    observe_start = min(1.0, float(recv[0]))
    gen = np.empty(n)
    prev_gen = observe_start - initial_age  # virtual predecessor generation
    for i in range(n):
        lo = max(prev_gen + 1e-3, recv[i] - max_delay)
        hi = recv[i] - min_delay
        gen[i] = rng.uniform(min(lo, hi), hi) if hi > lo else hi
        prev_gen = gen[i]
    return Trace.from_seconds(
        list(zip(gen, recv)),
        initial_age=initial_age,
        observe_start=observe_start,
        observe_end=float(recv[-1]) + float(rng.uniform(0, 2.0)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
