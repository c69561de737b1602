"""Exact sample-path age statistics: sawtooth construction, time-average age
in three mutually verifiable forms, peak age, and penalty averages.

Conventions:

* Age follows the sawtooth age(t) = t - U(t), U(t) = newest generation time
  received by t; slope +1 between receptions, downward jump to the system
  time Y_i at each effective reception.
* The per-interval forms (Q-form, H-form, penalty averages, peak age) are
  defined on the horizon [r_0, r_N], where r_0 is the observation start
  (reception instant of the virtual predecessor) and r_N the last effective
  reception. The geometric form integrates the sawtooth over the full
  observation window.
* All results are double-precision seconds; inputs are nanosecond traces.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .penalty import PenaltyFunction, linear
from .trace import NS_PER_S, Trace, TraceError, UpdateRecord, effective_trace

GEOMETRIC = "geometric"
QFORM = "qform"
HFORM = "hform"


@dataclass(frozen=True)
class AgeSamplePath:
    """Piecewise-linear sawtooth as (t_ns, age_ns) breakpoints.

    Jumps appear as two breakpoints at the same t: the peak followed by the
    post-reception value.
    """

    breakpoints: tuple[tuple[int, int], ...]

    def evaluate(self, t_ns: int) -> int:
        """Age at t_ns (post-jump value at reception instants)."""
        ts = [bp[0] for bp in self.breakpoints]
        if not ts or t_ns < ts[0] or t_ns > ts[-1]:
            raise ValueError("t_ns outside the sample path")
        i = bisect.bisect_right(ts, t_ns) - 1
        t0, a0 = self.breakpoints[i]
        return a0 + (t_ns - t0)

    def integrate(self, t0_ns: int, t1_ns: int) -> float:
        """Area under the sawtooth on [t0_ns, t1_ns], in seconds squared."""
        if t1_ns < t0_ns:
            raise ValueError("non-positive integration window")
        pts = self.breakpoints
        area = 0.0
        for (ta, aa), (tb, ab) in zip(pts, pts[1:]):
            lo, hi = max(ta, t0_ns), min(tb, t1_ns)
            if hi <= lo:
                continue
            a_lo = aa + (lo - ta)
            a_hi = aa + (hi - ta)
            area += (hi - lo) * (a_lo + a_hi) / 2.0
        return area / (NS_PER_S * NS_PER_S)


def _effective_records(trace: Trace) -> tuple[Trace, list[UpdateRecord]]:
    """Effective trace plus its records additionally filtered against the
    virtual predecessor (a record older than the initial condition cannot
    refresh the age)."""
    eff = effective_trace(trace)
    origin_gen = trace.observe_start_ns - trace.initial_age_ns
    recs = [r for r in eff.records if r.gen_ns > origin_gen]
    return eff, recs


def sample_path(trace: Trace) -> AgeSamplePath:
    """Sawtooth of the age process over the full observation window."""
    _, recs = _effective_records(trace)
    start, end = trace.observe_start_ns, trace.observe_end_ns
    cur_gen = start - trace.initial_age_ns
    pts: list[tuple[int, int]] = [(start, start - cur_gen)]
    for rec in recs:
        pts.append((rec.recv_ns, rec.recv_ns - cur_gen))  # peak
        cur_gen = rec.gen_ns
        pts.append((rec.recv_ns, rec.recv_ns - cur_gen))  # post-jump
    if end > pts[-1][0]:
        pts.append((end, end - cur_gen))
    return AgeSamplePath(breakpoints=tuple(pts))


def _intervals(trace: Trace):
    """Per-interval terms (beta_i, theta_i) in seconds, i = 1..N, with the
    virtual predecessor supplying the i=1 predecessor."""
    _, recs = _effective_records(trace)
    if not recs:
        raise TraceError("no effective updates")
    origin = trace.observe_start_ns
    prev_gen = origin - trace.initial_age_ns
    prev_recv = origin
    beta = np.empty(len(recs))
    theta = np.empty(len(recs))
    for i, rec in enumerate(recs):
        beta[i] = (prev_recv - prev_gen) / NS_PER_S
        theta[i] = (rec.recv_ns - prev_gen) / NS_PER_S
        prev_gen, prev_recv = rec.gen_ns, rec.recv_ns
    horizon = (recs[-1].recv_ns - origin) / NS_PER_S
    if horizon <= 0:
        raise TraceError("non-positive horizon")
    return beta, theta, recs, horizon


@dataclass(frozen=True)
class AreaDecomposition:
    """Per-interval building blocks of the age area on [r_0, r_N].

    ``q_terms`` holds the N update trapezoids; together with the closing
    triangle Y_N^2/2 and minus the opening triangle age_0^2/2 (the part of
    the first trapezoid before the observation start) they sum to the
    geometric area, as do the ``h_terms``.
    """

    q_terms: tuple[float, ...]
    h_terms: tuple[float, ...]
    interval_terms: tuple[tuple[float, float], ...]  # (beta_i, theta_i)
    tail_triangle: float  # Y_N^2 / 2
    initial_triangle: float  # age_0^2 / 2
    horizon: float

    @property
    def q_area(self) -> float:
        return sum(self.q_terms) + self.tail_triangle - self.initial_triangle

    @property
    def h_area(self) -> float:
        return sum(self.h_terms)


def area_decomposition(trace: Trace) -> AreaDecomposition:
    beta, theta, recs, horizon = _intervals(trace)
    origin = trace.observe_start_ns
    prev_gen = origin - trace.initial_age_ns
    q_terms = []
    for rec in recs:
        x = (rec.gen_ns - prev_gen) / NS_PER_S  # inter-generation time X_i
        y = (rec.recv_ns - rec.gen_ns) / NS_PER_S  # system time Y_i
        q_terms.append(x * y + x * x / 2.0)
        prev_gen = rec.gen_ns
    d = theta - beta
    h_terms = d * beta + d * d / 2.0
    y_last = (recs[-1].recv_ns - recs[-1].gen_ns) / NS_PER_S
    age0 = trace.initial_age_ns / NS_PER_S
    return AreaDecomposition(
        q_terms=tuple(q_terms),
        h_terms=tuple(float(h) for h in h_terms),
        interval_terms=tuple(zip(beta.tolist(), theta.tolist())),
        tail_triangle=y_last * y_last / 2.0,
        initial_triangle=age0 * age0 / 2.0,
        horizon=horizon,
    )


def time_average_age(trace: Trace, method: str = GEOMETRIC) -> float:
    """Time-average age in seconds.

    ``geometric``: exact trapezoidal area of the sawtooth over the full
    observation window. ``qform``/``hform``: per-interval trapezoid sums on
    [r_0, r_N]; both agree with the geometric area restricted to that
    horizon to floating tolerance.
    """
    if method == GEOMETRIC:
        start, end = trace.observe_start_ns, trace.observe_end_ns
        if end <= start:
            raise TraceError("non-positive horizon")
        path = sample_path(trace)
        return path.integrate(start, end) / ((end - start) / NS_PER_S)
    beta, theta, recs, horizon = _intervals(trace)
    if method == HFORM:
        d = theta - beta
        return float(np.sum(d * beta + d * d / 2.0)) / horizon
    if method == QFORM:
        dec = area_decomposition(trace)
        return dec.q_area / horizon
    raise ValueError(f"unknown method {method!r}")


def peak_average_age(trace: Trace) -> float:
    """Mean of the sawtooth values immediately before each downward jump:
    (1/N) sum_i (r_i - s_{i-1}), in seconds."""
    beta, theta, recs, _ = _intervals(trace)
    return float(np.mean(theta))


def penalty_average(trace: Trace, f: PenaltyFunction) -> float:
    """Time-average penalty (1/T) sum_i [F(theta_i) - F(beta_i)] on the
    horizon [r_0, r_N]; identical to (1/T) * integral of f(age(t))."""
    beta, theta, recs, horizon = _intervals(trace)
    return float(np.sum(f.F(theta) - f.F(beta))) / horizon


def loss_runs(seqs) -> dict[int, int]:
    """Histogram {run_length: count} of consecutive-loss runs from seq gaps."""
    uniq = sorted(set(seqs))
    runs: dict[int, int] = {}
    for a, b in zip(uniq, uniq[1:]):
        gap = b - a - 1
        if gap > 0:
            runs[gap] = runs.get(gap, 0) + 1
    return runs


@dataclass(frozen=True)
class AgeStatistics:
    """Aggregate per-trace statistics; age fields are None for traces with no
    effective update."""

    avg_age: Optional[float]
    peak_age: Optional[float]
    avg_penalty: Optional[float]
    max_age: Optional[float]
    n_effective: int
    n_stale_discarded: int
    loss_runs: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "avg_age_s": self.avg_age,
            "peak_age_s": self.peak_age,
            "avg_penalty": self.avg_penalty,
            "max_age_s": self.max_age,
            "n_effective": self.n_effective,
            "n_stale_discarded": self.n_stale_discarded,
            "loss_runs": {str(k): v for k, v in sorted(self.loss_runs.items())},
        }


def compute_statistics(trace: Trace, f: PenaltyFunction | None = None) -> AgeStatistics:
    """Full statistics of a raw trace: stale filtering is applied internally
    for age values; loss runs come from seq gaps of the raw records."""
    if f is None:
        f = linear(1.0)
    runs = loss_runs([r.seq for r in trace.records])
    _, recs = _effective_records(trace)
    n_stale = len(trace.records) - len(recs)
    if not recs:
        return AgeStatistics(
            avg_age=None,
            peak_age=None,
            avg_penalty=None,
            max_age=None,
            n_effective=0,
            n_stale_discarded=n_stale,
            loss_runs=runs,
        )
    path = sample_path(trace)
    return AgeStatistics(
        avg_age=time_average_age(trace, GEOMETRIC),
        peak_age=peak_average_age(trace),
        avg_penalty=penalty_average(trace, f),
        max_age=max(a for _, a in path.breakpoints) / NS_PER_S,
        n_effective=len(recs),
        n_stale_discarded=n_stale,
        loss_runs=runs,
    )
