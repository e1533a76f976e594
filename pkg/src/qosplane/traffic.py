"""Synthetic user-plane sources: constant-bit-rate GTP-U flows.

Arrival times are computed directly as ``start + n * frame_bits / rate``
in integer nanoseconds, so a flow's long-run rate is exact regardless of
run length.  Optional jitter displaces each arrival within half a gap
(scaled by ``jitter_fraction``), which decorrelates flow phases without
changing how many packets fall in any window longer than a few gaps, and
keeps every per-flow stream strictly increasing.  Per-flow streams merge
into one globally time-ordered stream; packet ids number the merged
stream, so equal-time arrivals are ordered by packet id by construction.
"""

import heapq
import random
from dataclasses import dataclass
from typing import Iterator

from .core import PacketRecord
from .units import NS_PER_S
from .wire import MIN_FRAME_BYTES


@dataclass(frozen=True)
class FlowSpec:
    """One CBR flow: identity, class, rate and framing."""

    teid: int
    five_qi: int
    inner_src_port: int
    rate_bps: int
    frame_size_bytes: int
    start_ns: int = 0
    stop_ns: int | None = None
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if not 1 <= self.teid <= 0xFFFFFFFF:
            raise ValueError(f"teid {self.teid} outside 1..2^32-1")
        if self.rate_bps <= 0:
            raise ValueError("rate must be positive")
        if self.frame_size_bytes < MIN_FRAME_BYTES:
            raise ValueError(
                f"frame of {self.frame_size_bytes} B cannot hold the "
                f"{MIN_FRAME_BYTES}-byte header stack"
            )
        if not 0 <= self.inner_src_port <= 65535:
            raise ValueError(f"bad port {self.inner_src_port}")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ValueError("jitter_fraction outside [0, 1)")
        if self.stop_ns is not None and self.stop_ns <= self.start_ns:
            raise ValueError("stop must come after start")

    @property
    def gap_ns(self) -> int:
        """Nominal inter-arrival time."""
        return self.frame_size_bytes * 8 * NS_PER_S // self.rate_bps


def _flow_arrivals(spec: FlowSpec, horizon_ns: int,
                   seed: int) -> Iterator[tuple[int, int]]:
    """Yield (arrival_ns, teid), strictly increasing, until the horizon."""
    frame_units = spec.frame_size_bytes * 8 * NS_PER_S
    rate = spec.rate_bps
    start = spec.start_ns
    stop = horizon_ns if spec.stop_ns is None else min(spec.stop_ns, horizon_ns)
    teid = spec.teid
    if spec.jitter_fraction:
        # Displacement within [0, jitter * gap); amplitude strictly under
        # one gap keeps the stream monotone and window counts exact.
        amp = int(spec.gap_ns * spec.jitter_fraction)
        rng = random.Random((seed << 32) ^ teid)
        n = 0
        while True:
            base = start + n * frame_units // rate
            if base >= stop:
                return
            t = base + rng.randrange(amp) if amp else base
            yield t, teid
            n += 1
    else:
        n = 0
        while True:
            t = start + n * frame_units // rate
            if t >= stop:
                return
            yield t, teid
            n += 1


def emit(flows: list[FlowSpec], seed: int,
         horizon_ns: int) -> Iterator[PacketRecord]:
    """Merged, time-ordered arrival stream for all flows.

    Deterministic in (flows, seed): the same inputs produce an identical
    stream.  Ties between flows break on teid, and packet ids follow the
    merged order.
    """
    teids = [f.teid for f in flows]
    if len(set(teids)) != len(teids):
        raise ValueError("duplicate teid in flow list")
    sizes = {f.teid: f.frame_size_bytes for f in flows}
    streams = [_flow_arrivals(f, horizon_ns, seed) for f in flows]
    for pkt_id, (t, teid) in enumerate(heapq.merge(*streams)):
        yield PacketRecord(pkt_id, teid, sizes[teid], t)
