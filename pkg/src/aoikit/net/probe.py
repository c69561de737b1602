"""RTT-probe clock-offset estimation and the echo reflector it talks to.

The estimator sends K probes, keeps the one with the minimum RTT, and splits
that RTT symmetrically: B = t_reflector - (t_send + RTT/2). The estimation
error is bounded by the RTT regardless of the actual path asymmetry; the
alternative full-RTT subtraction is selectable.
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass

from ..syncbias import ClockBiasModel
from .clock import DEFAULT_CLOCK, SessionClock
from .wire import (
    PT_PROBE,
    PT_PROBE_ECHO,
    WireError,
    decode,
    encode_probe,
    encode_probe_echo,
)

HALF_RTT = "half_rtt"
FULL_RTT = "full_rtt"


class ProbeError(RuntimeError):
    """No probe echoes came back."""


@dataclass(frozen=True)
class OffsetEstimate:
    bias_ns: int
    min_rtt_ns: int
    probes_used: int

    def to_model(self) -> ClockBiasModel:
        return ClockBiasModel(
            bias_ns=self.bias_ns,
            rtt_bound_ns=self.min_rtt_ns,
            probe_count=self.probes_used,
        )


def combine_stamps(t_send_ns: int, t_reflect_ns: int, t_arrive_ns: int, mode: str = HALF_RTT) -> tuple[int, int]:
    """(bias_ns, rtt_ns) from one probe's three timestamps."""
    rtt = t_arrive_ns - t_send_ns
    if mode == HALF_RTT:
        bias = t_reflect_ns - (t_send_ns + rtt // 2)
    elif mode == FULL_RTT:
        bias = t_reflect_ns - (t_send_ns + rtt)
    else:
        raise ValueError(f"unknown estimation mode {mode!r}")
    return bias, rtt


class Reflector:
    """UDP probe echo service. ``bias_ns`` injects an artificial clock offset
    and ``delay_s`` a symmetric processing delay; both exist so controlled
    tests have a known ground truth."""

    def __init__(self, bind_addr: tuple[str, int], bias_ns: int = 0, delay_s: float = 0.0,
                 clock: SessionClock | None = None):
        self.clock = clock if clock is not None else DEFAULT_CLOCK
        self.bias_ns = bias_ns
        self.delay_s = delay_s
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind(bind_addr)
        self._sock.settimeout(0.2)
        self.local_addr = self._sock.getsockname()
        self._running = False
        self._thread: threading.Thread | None = None

    def start(self) -> "Reflector":
        self._running = True
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._running = False
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._sock.close()

    def __enter__(self) -> "Reflector":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _run(self) -> None:
        while self._running:
            try:
                data, peer = self._sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            recv_ns = self.clock.now_ns() + self.bias_ns
            try:
                pkt = decode(data)
            except WireError:
                continue
            if pkt.ptype != PT_PROBE:
                continue
            if self.delay_s > 0:
                time.sleep(self.delay_s)
            echo = encode_probe_echo(pkt.seq, pkt.gen_ns, recv_ns)
            try:
                self._sock.sendto(echo, peer)
            except OSError:
                break


def estimate_offset(
    addr: tuple[str, int],
    probe_count: int = 10,
    timeout_s: float = 0.5,
    mode: str = HALF_RTT,
    clock: SessionClock | None = None,
) -> OffsetEstimate:
    """Probe a reflector and derive the clock offset from the minimum-RTT
    probe. Raises ProbeError if no echo returns."""
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    if clock is None:
        clock = DEFAULT_CLOCK
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(timeout_s)
    sock.connect(addr)
    best: tuple[int, int] | None = None  # (rtt_ns, bias_ns)
    used = 0
    try:
        for k in range(probe_count):
            t_send = clock.now_ns()
            try:
                sock.send(encode_probe(k, t_send))
            except OSError:
                continue
            while True:
                try:
                    data = sock.recv(65535)
                except socket.timeout:
                    break
                except OSError:
                    # e.g. ICMP port-unreachable surfacing as connection refused
                    break
                t_arrive = clock.now_ns()
                try:
                    pkt = decode(data)
                except WireError:
                    continue
                if pkt.ptype != PT_PROBE_ECHO or pkt.seq != k or pkt.reflector_recv_ns is None:
                    continue  # stray or stale echo
                bias, rtt = combine_stamps(t_send, pkt.reflector_recv_ns, t_arrive, mode)
                used += 1
                if best is None or rtt < best[0]:
                    best = (rtt, bias)
                break
    finally:
        sock.close()
    if best is None:
        raise ProbeError("no probes returned")
    rtt, bias = best
    return OffsetEstimate(bias_ns=bias, min_rtt_ns=rtt, probes_used=used)
