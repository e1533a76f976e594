"""Multi-queue egress: tail-drop buffers, strict priority across tiers,
deficit weighted round-robin inside a tier, and an optional minimum-rate
reservation that lets a shared queue steal one packet at a time.

The scheduler owns the link: serving a packet advances ``busy_until_ns``
by the exact serialization time (remainder-carrying integer division, so
the long-run drain rate is exactly the configured capacity).  Measured
per-packet delay is the time from ingress to selection for transmission,
i.e. queueing plus any head-of-line wait, excluding own serialization.
"""

from array import array
from collections import deque
from dataclasses import dataclass, field

from .core import PacketRecord, ResourceType, ServiceTag
from .units import NS_PER_S


class UnmappedCombination(KeyError):
    """No queue is configured for this (service tag, resource type)."""


@dataclass(frozen=True)
class QueueConfig:
    """One egress queue: tier, binding, buffer bound and DWRR quantum.

    ``resource_binding=None`` means the queue accepts any resource type.
    ``reserved_rate_bps`` arms the starvation-mitigation token bucket.
    """

    queue_id: int
    tier: int
    resource_binding: ResourceType | None
    buffer_bytes: int
    dwrr_quantum: int
    reserved_rate_bps: int | None = None

    def __post_init__(self):
        if self.buffer_bytes <= 0:
            raise ValueError(f"Q{self.queue_id}: buffer_bytes must be positive")
        if self.dwrr_quantum <= 0:
            raise ValueError(f"Q{self.queue_id}: dwrr_quantum must be positive")


@dataclass(frozen=True)
class MapEntry:
    """(tag, resource type or wildcard) -> queue."""

    service_tag: ServiceTag
    resource_type: ResourceType | None
    queue_id: int


class QueueMap:
    """Queue configurations plus the tag/type -> queue binding."""

    def __init__(self, configs: list[QueueConfig], entries: list[MapEntry]):
        self.configs = tuple(sorted(configs, key=lambda c: c.queue_id))
        ids = [c.queue_id for c in self.configs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate queue_id in queue map")
        known = set(ids)
        self._binding: dict[tuple[ServiceTag, ResourceType], int] = {}
        for e in entries:
            if e.queue_id not in known:
                raise ValueError(f"map entry references unknown Q{e.queue_id}")
            rtypes = [e.resource_type] if e.resource_type else list(ResourceType)
            for rt in rtypes:
                key = (e.service_tag, rt)
                if key in self._binding:
                    raise ValueError(
                        f"duplicate map entry for ({e.service_tag.name}, {rt.name})"
                    )
                self._binding[key] = e.queue_id

    def select(self, tag: ServiceTag, rtype: ResourceType) -> int:
        try:
            return self._binding[(tag, rtype)]
        except KeyError:
            raise UnmappedCombination(
                f"no queue for ({tag.name}, {rtype.name})"
            ) from None

    def max_tier(self) -> int:
        return max(c.tier for c in self.configs)


def default_queue_map(link_rate_bps: int,
                      fast_buffer_bytes: int | None = None,
                      shared_buffer_bytes: int | None = None,
                      quantum: int = 1500) -> QueueMap:
    """The standard eight-queue, four-tier layout.

    Tier 0 holds the two delay-critical queues, tier 1 the dedicated GBR
    queue, tier 2 the prioritized queue (any resource type), and tier 3
    one shared queue per resource type.  Default buffers give the top
    two tiers a 100 microsecond drain bound at the configured link rate
    and the shared tiers 1 millisecond.
    """
    if fast_buffer_bytes is None:
        fast_buffer_bytes = link_rate_bps // 80_000   # R * 100us / 8
    if shared_buffer_bytes is None:
        shared_buffer_bytes = link_rate_bps // 8_000  # R * 1ms / 8
    q = QueueConfig
    configs = [
        q(1, 0, ResourceType.NON_GBR_DC, fast_buffer_bytes, quantum),
        q(2, 0, ResourceType.GBR_DC, fast_buffer_bytes, quantum),
        q(3, 1, ResourceType.GBR, fast_buffer_bytes, quantum),
        q(4, 2, None, shared_buffer_bytes, quantum),
        q(5, 3, ResourceType.NON_GBR_DC, shared_buffer_bytes, quantum),
        q(6, 3, ResourceType.GBR_DC, shared_buffer_bytes, quantum),
        q(7, 3, ResourceType.GBR, shared_buffer_bytes, quantum),
        q(8, 3, ResourceType.NON_GBR, shared_buffer_bytes, quantum),
    ]
    entries = [
        MapEntry(ServiceTag.DELAY_CRITICAL, ResourceType.NON_GBR_DC, 1),
        MapEntry(ServiceTag.DELAY_CRITICAL, ResourceType.GBR_DC, 2),
        MapEntry(ServiceTag.DEDICATED, ResourceType.GBR, 3),
        MapEntry(ServiceTag.PRIORITIZED, None, 4),
        MapEntry(ServiceTag.SHARED, ResourceType.NON_GBR_DC, 5),
        MapEntry(ServiceTag.SHARED, ResourceType.GBR_DC, 6),
        MapEntry(ServiceTag.SHARED, ResourceType.GBR, 7),
        MapEntry(ServiceTag.SHARED, ResourceType.NON_GBR, 8),
    ]
    return QueueMap(configs, entries)


@dataclass
class QueueStats:
    enqueued: int = 0
    tail_dropped: int = 0
    dequeued: int = 0
    max_delay_ns: int = 0
    delays_ns: array = field(default_factory=lambda: array("q"))


class _Queue:
    __slots__ = ("cfg", "pkts", "occupancy", "stats",
                 "res_tokens", "res_cap", "res_last")

    def __init__(self, cfg: QueueConfig):
        self.cfg = cfg
        self.pkts: deque[PacketRecord] = deque()
        self.occupancy = 0
        self.stats = QueueStats()
        # Reservation bucket (rate-time units), capped at one quantum.
        self.res_cap = cfg.dwrr_quantum * 8 * NS_PER_S
        self.res_tokens = self.res_cap if cfg.reserved_rate_bps else 0
        self.res_last = 0


class _TierState:
    __slots__ = ("order", "ptr", "current", "deficit")

    def __init__(self, order: list[int]):
        self.order = order
        self.ptr = len(order) - 1
        self.current: int | None = None
        self.deficit: dict[int, int] = {qid: 0 for qid in order}


class EgressScheduler:
    """Egress state: queues, DWRR bookkeeping, reservations, link clock."""

    def __init__(self, queue_map: QueueMap, link_rate_bps: int):
        if link_rate_bps <= 0:
            raise ValueError("link rate must be positive")
        self.queue_map = queue_map
        self.link_rate_bps = link_rate_bps
        self._queues: dict[int, _Queue] = {
            c.queue_id: _Queue(c) for c in queue_map.configs
        }
        tiers: dict[int, list[int]] = {}
        for c in queue_map.configs:
            tiers.setdefault(c.tier, []).append(c.queue_id)
        self._tiers = [
            (tier, _TierState(sorted(qids))) for tier, qids in sorted(tiers.items())
        ]
        self._reserved = sorted(
            qid for qid, q in self._queues.items() if q.cfg.reserved_rate_bps
        )
        self.busy_until_ns = 0
        self.backlog_pkts = 0
        self._ser_rem = 0

    # -- queue access -------------------------------------------------

    def select(self, tag: ServiceTag, rtype: ResourceType) -> int:
        return self.queue_map.select(tag, rtype)

    def stats(self, queue_id: int) -> QueueStats:
        return self._queues[queue_id].stats

    def occupancy(self, queue_id: int) -> int:
        return self._queues[queue_id].occupancy

    # -- enqueue / dequeue --------------------------------------------

    def enqueue(self, pkt: PacketRecord, queue_id: int) -> bool:
        """Tail-drop admit: True iff the packet fit in the buffer."""
        q = self._queues[queue_id]
        if q.occupancy + pkt.size_bytes > q.cfg.buffer_bytes:
            q.stats.tail_dropped += 1
            return False
        q.pkts.append(pkt)
        q.occupancy += pkt.size_bytes
        q.stats.enqueued += 1
        self.backlog_pkts += 1
        return True

    def _serialization_ns(self, size_bytes: int) -> int:
        num = size_bytes * 8 * NS_PER_S + self._ser_rem
        self._ser_rem = num % self.link_rate_bps
        return num // self.link_rate_bps

    def _serve(self, q: _Queue, now_ns: int) -> PacketRecord:
        pkt = q.pkts.popleft()
        q.occupancy -= pkt.size_bytes
        self.backlog_pkts -= 1
        delay = now_ns - pkt.ingress_ts_ns
        st = q.stats
        st.dequeued += 1
        st.delays_ns.append(delay)
        if delay > st.max_delay_ns:
            st.max_delay_ns = delay
        pkt.departure_time_ns = now_ns + self._serialization_ns(pkt.size_bytes)
        self.busy_until_ns = pkt.departure_time_ns
        return pkt

    def _reservation_pick(self, now_ns: int) -> _Queue | None:
        for qid in self._reserved:
            q = self._queues[qid]
            if not q.pkts:
                continue
            elapsed = now_ns - q.res_last
            if elapsed:
                tokens = q.res_tokens + q.cfg.reserved_rate_bps * elapsed
                q.res_tokens = tokens if tokens < q.res_cap else q.res_cap
                q.res_last = now_ns
            need = q.pkts[0].size_bytes * 8 * NS_PER_S
            if q.res_tokens >= need:
                q.res_tokens -= need
                return q
        return None

    def _dwrr_pick(self, ts: _TierState) -> _Queue | None:
        # Sticky current queue: keep serving while its deficit covers the
        # head packet; deficit carries across visits and resets to zero
        # only when the queue empties.
        if ts.current is not None:
            q = self._queues[ts.current]
            if q.pkts and ts.deficit[ts.current] >= q.pkts[0].size_bytes:
                return q
            if not q.pkts:
                ts.deficit[ts.current] = 0
            ts.current = None
        order = ts.order
        n = len(order)
        for _ in range(n):
            ts.ptr = (ts.ptr + 1) % n
            qid = order[ts.ptr]
            q = self._queues[qid]
            if not q.pkts:
                ts.deficit[qid] = 0
                continue
            ts.deficit[qid] += q.cfg.dwrr_quantum
            if ts.deficit[qid] >= q.pkts[0].size_bytes:
                ts.current = qid
                return q
        return None

    def dequeue_next(self, now_ns: int) -> PacketRecord | None:
        """Select and serve one packet; None when every queue is empty.

        Selection order: an armed reservation preempts for exactly one
        packet; otherwise the lowest-numbered nonempty tier wins, with
        DWRR arbitration inside the tier.  The caller guarantees the
        link is idle (``now_ns >= busy_until_ns``).
        """
        if self.backlog_pkts == 0:
            return None
        q = self._reservation_pick(now_ns)
        if q is not None:
            served = self._serve(q, now_ns)
            self._note_dwrr_bypass(q)
            return served
        for _tier, ts in self._tiers:
            q = self._dwrr_pick(ts)
            if q is not None:
                pkt = self._serve(q, now_ns)
                if not q.pkts:
                    ts.deficit[q.cfg.queue_id] = 0
                    if ts.current == q.cfg.queue_id:
                        ts.current = None
                else:
                    ts.deficit[q.cfg.queue_id] -= pkt.size_bytes
                return pkt
        return None

    def _note_dwrr_bypass(self, q: _Queue) -> None:
        # A reservation serve bypasses DWRR accounting; if it emptied the
        # queue, clear any stale deficit/current marker.
        for _tier, ts in self._tiers:
            if q.cfg.queue_id in ts.deficit and not q.pkts:
                ts.deficit[q.cfg.queue_id] = 0
                if ts.current == q.cfg.queue_id:
                    ts.current = None
