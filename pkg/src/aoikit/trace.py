"""Update traces: timestamped generation/reception records and CSV I/O.

All timestamps are integer nanoseconds. Statistics modules convert to
double-precision seconds relative to the observation window, so absolute
epoch-scale values stay lossless on disk and on the wire.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

NS_PER_S = 1_000_000_000


def ns_to_s(ns: int) -> float:
    return ns / NS_PER_S


def s_to_ns(s: float) -> int:
    return round(s * NS_PER_S)


class TraceError(ValueError):
    """Malformed trace data or an operation applied to an unusable trace."""


@dataclass(frozen=True)
class UpdateRecord:
    """One status update: generated at gen_ns, received at recv_ns."""

    seq: int
    gen_ns: int
    recv_ns: int

    @property
    def system_time_ns(self) -> int:
        """Delay experienced by this update (Y_i)."""
        return self.recv_ns - self.gen_ns


@dataclass(frozen=True)
class Trace:
    """An ordered sequence of updates plus the observation window.

    ``initial_age_ns`` is the age at ``observe_start_ns``. Internally it is
    realized as a virtual predecessor update generated at
    ``observe_start_ns - initial_age_ns`` and received at ``observe_start_ns``,
    which gives the i=1 terms of the per-interval age formulas a well-defined
    meaning.
    """

    records: tuple[UpdateRecord, ...]
    initial_age_ns: int = 0
    observe_start_ns: int = 0
    observe_end_ns: int = 0
    n_stale_discarded: int = 0

    def __post_init__(self):
        last_recv = None
        for rec in self.records:
            if last_recv is not None and rec.recv_ns < last_recv:
                raise TraceError("records must be sorted by recv_ns")
            last_recv = rec.recv_ns
        # initial_age_ns may be negative: a bias-shifted trace can report a
        # physically impossible apparent age (mis-synchronization)
        if self.records:
            if self.observe_start_ns > self.records[0].recv_ns:
                raise TraceError("observe_start_ns must not exceed first recv_ns")
            if self.observe_end_ns < self.records[-1].recv_ns:
                raise TraceError("observe_end_ns must cover last recv_ns")
        elif self.observe_end_ns < self.observe_start_ns:
            raise TraceError("empty observation window")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def virtual_origin(self) -> UpdateRecord:
        """The virtual predecessor realizing the initial age condition."""
        return UpdateRecord(
            seq=-1,
            gen_ns=self.observe_start_ns - self.initial_age_ns,
            recv_ns=self.observe_start_ns,
        )

    @classmethod
    def from_seconds(
        cls,
        gen_recv: Sequence[tuple[float, float]],
        initial_age: float = 0.0,
        observe_start: float | None = None,
        observe_end: float | None = None,
        seqs: Sequence[int] | None = None,
    ) -> "Trace":
        """Build a trace from (gen, recv) pairs expressed in seconds.

        Convenience constructor for tests and the simulator; seqs default to
        0..n-1.
        """
        if seqs is None:
            seqs = range(len(gen_recv))
        records = tuple(
            UpdateRecord(seq=q, gen_ns=s_to_ns(g), recv_ns=s_to_ns(r))
            for q, (g, r) in zip(seqs, gen_recv)
        )
        if observe_start is None:
            observe_start = ns_to_s(records[0].recv_ns) if records else 0.0
        if observe_end is None:
            observe_end = ns_to_s(records[-1].recv_ns) if records else observe_start
        return cls(
            records=records,
            initial_age_ns=s_to_ns(initial_age),
            observe_start_ns=s_to_ns(observe_start),
            observe_end_ns=s_to_ns(observe_end),
        )

    @classmethod
    def from_records(cls, records: Iterable[UpdateRecord]) -> "Trace":
        """Anchor a measured/simulated record stream into a trace.

        The first record becomes the virtual predecessor: it defines the
        observation start and the initial age; the remaining records form the
        trace body.
        """
        recs = sorted(records, key=lambda r: (r.recv_ns, r.seq))
        if not recs:
            return cls(records=())
        anchor, rest = recs[0], tuple(recs[1:])
        return cls(
            records=rest,
            initial_age_ns=anchor.recv_ns - anchor.gen_ns,
            observe_start_ns=anchor.recv_ns,
            observe_end_ns=rest[-1].recv_ns if rest else anchor.recv_ns,
        )


def effective_trace(trace: Trace) -> Trace:
    """Drop stale records: keep only updates whose generation time strictly
    exceeds every earlier-received generation time, so the freshest-update
    time is non-decreasing.

    Discarded records are counted in ``n_stale_discarded`` (cumulative with
    any prior filtering); seq-gap loss statistics are computed from the raw
    trace, not here.
    """
    kept = []
    newest_gen = None
    dropped = 0
    for rec in trace.records:
        if newest_gen is None or rec.gen_ns > newest_gen:
            kept.append(rec)
            newest_gen = rec.gen_ns
        else:
            dropped += 1
    return replace(
        trace,
        records=tuple(kept),
        n_stale_discarded=trace.n_stale_discarded + dropped,
    )


CSV_HEADER = "seq,gen_ns,recv_ns"

_META_FIELDS = {
    "observe_start_ns": "observe_start_ns",
    "observe_end_ns": "observe_end_ns",
    "initial_age_ns": "initial_age_ns",
    "clock_bias_ns": None,  # informational; not a Trace field
}


def write_trace_csv(trace: Trace, fp: io.TextIOBase, clock_bias_ns: int | None = None) -> None:
    fp.write(f"# observe_start_ns={trace.observe_start_ns}\n")
    fp.write(f"# observe_end_ns={trace.observe_end_ns}\n")
    fp.write(f"# initial_age_ns={trace.initial_age_ns}\n")
    if clock_bias_ns is not None:
        fp.write(f"# clock_bias_ns={clock_bias_ns}\n")
    fp.write(CSV_HEADER + "\n")
    for rec in trace.records:
        fp.write(f"{rec.seq},{rec.gen_ns},{rec.recv_ns}\n")


def read_trace_csv(fp: io.TextIOBase) -> Trace:
    """Parse the trace CSV schema; raises TraceError with a line number on
    malformed input."""
    meta: dict[str, int] = {}
    records: list[UpdateRecord] = []
    header_seen = False
    for lineno, raw in enumerate(fp, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                key = key.strip()
                if key in _META_FIELDS:
                    try:
                        meta[key] = int(val.strip())
                    except ValueError:
                        raise TraceError(f"line {lineno}: bad metadata value {val!r}")
            continue
        if not header_seen:
            if line != CSV_HEADER:
                raise TraceError(f"line {lineno}: expected header {CSV_HEADER!r}, got {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            seq, gen_ns, recv_ns = (int(p) for p in parts)
        except ValueError:
            raise TraceError(f"line {lineno}: non-integer field in {line!r}")
        records.append(UpdateRecord(seq=seq, gen_ns=gen_ns, recv_ns=recv_ns))
    if not header_seen:
        raise TraceError("empty trace file (missing header)")
    records.sort(key=lambda r: (r.recv_ns, r.seq))
    start = meta.get("observe_start_ns", records[0].recv_ns if records else 0)
    end = meta.get("observe_end_ns", records[-1].recv_ns if records else start)
    try:
        return Trace(
            records=tuple(records),
            initial_age_ns=meta.get("initial_age_ns", 0),
            observe_start_ns=start,
            observe_end_ns=end,
        )
    except TraceError as exc:
        raise TraceError(f"inconsistent trace metadata: {exc}")
