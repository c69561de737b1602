"""Operating-region classification of a measured update stream.

The stream is cut into fixed windows of receiver time. Each window is labeled
from its loss and delay evidence:

* Relaxed: essentially no loss, delay at the baseline level.
* Busy: losses present but only in short runs, delay still near baseline.
* Panicked: long consecutive-loss runs, or the delay level has jumped well
  above baseline.

The baseline delay is the median delay of the first Relaxed-looking window
(no loss). All thresholds are configuration, not claims: on paths where a
single FIFO bottleneck dominates, the delay level jumps as soon as the queue
fills and the delay-ratio rules should be relaxed or disabled so that the
loss-run evidence decides.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import median
from typing import Optional, Sequence

from ..trace import NS_PER_S, UpdateRecord

RELAXED = "relaxed"
BUSY = "busy"
PANICKED = "panicked"


@dataclass(frozen=True)
class RegionConfig:
    window_s: float = 1.0
    max_relaxed_loss_rate: float = 0.001
    panicked_min_run: int = 3
    relaxed_delay_ratio: Optional[float] = 1.5  # None disables the rule
    panicked_delay_ratio: Optional[float] = 2.0  # None disables the rule


@dataclass(frozen=True)
class RegionLabel:
    label: str
    start_seq: int
    end_seq: int
    loss_rate: float
    max_loss_run: int
    delay_ratio: float


@dataclass(frozen=True)
class RegionReport:
    labels: tuple[RegionLabel, ...]
    baseline_delay_s: float
    baseline_from_global: bool  # no loss-free window found; global median used

    def collapsed(self) -> list[str]:
        """Label sequence with consecutive duplicates merged."""
        out: list[str] = []
        for lab in self.labels:
            if not out or out[-1] != lab.label:
                out.append(lab.label)
        return out


def _windows(records: Sequence[UpdateRecord], window_s: float):
    width = round(window_s * NS_PER_S)
    t0 = records[0].recv_ns
    wins: list[list[UpdateRecord]] = []
    for rec in records:
        idx = (rec.recv_ns - t0) // width
        while len(wins) <= idx:
            wins.append([])
        wins[idx].append(rec)
    return [w for w in wins if w]


def classify_regions(
    records: Sequence[UpdateRecord], config: RegionConfig | None = None
) -> RegionReport:
    """Label each window of the received stream. Records must carry the raw
    (possibly gapped) seq numbers; delays are recv - gen per record."""
    if config is None:
        config = RegionConfig()
    if not records:
        raise ValueError("no records to classify")
    records = sorted(records, key=lambda r: r.recv_ns)
    wins = _windows(records, config.window_s)

    evidence = []
    prev_last_seq: Optional[int] = None
    for win in wins:
        seqs = sorted(r.seq for r in win)
        lost = 0
        max_run = 0
        run_anchor = prev_last_seq if prev_last_seq is not None else seqs[0]
        last = run_anchor
        for s in seqs:
            gap = s - last - 1
            if gap > 0:
                lost += gap
                max_run = max(max_run, gap)
            last = s
        prev_last_seq = seqs[-1]
        loss_rate = lost / (lost + len(seqs))
        delay = median((r.recv_ns - r.gen_ns) / NS_PER_S for r in win)
        evidence.append((win, loss_rate, max_run, delay))

    baseline = None
    for _, loss_rate, _, delay in evidence:
        if loss_rate < config.max_relaxed_loss_rate:
            baseline = delay
            break
    from_global = baseline is None
    if from_global:
        baseline = median(e[3] for e in evidence)

    labels = []
    for win, loss_rate, max_run, delay in evidence:
        ratio = delay / baseline if baseline > 0 else float("inf")
        panicked = max_run >= config.panicked_min_run or (
            config.panicked_delay_ratio is not None
            and ratio >= config.panicked_delay_ratio
        )
        relaxed = loss_rate < config.max_relaxed_loss_rate and (
            config.relaxed_delay_ratio is None or ratio <= config.relaxed_delay_ratio
        )
        if panicked:
            label = PANICKED
        elif relaxed:
            label = RELAXED
        else:
            label = BUSY
        labels.append(
            RegionLabel(
                label=label,
                start_seq=min(r.seq for r in win),
                end_seq=max(r.seq for r in win),
                loss_rate=loss_rate,
                max_loss_run=max_run,
                delay_ratio=ratio,
            )
        )
    return RegionReport(
        labels=tuple(labels),
        baseline_delay_s=baseline,
        baseline_from_global=from_global,
    )
