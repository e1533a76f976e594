"""The event loop tying the pipeline together, plus control-plane duties.

Every generated packet runs classify -> meter -> tag -> enqueue and is
eventually served by the link or dropped; the loop alternates between
arrivals (in stream order) and link services (whenever the link is idle
and a queue is backlogged), with arrivals winning ties at equal times.
The engine also carries the monitoring half of the control plane:
per-window counters, packet-delay-budget accounting, and an alert hook
evaluated at each measurement-window boundary.

Runs are deterministic: identical scenario plus seed produces identical
metrics, and the exported files are byte-identical.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .analytics import (AnalyticInputs, AnalyticOutputs, GuaranteedFlow,
                        analyze)
from .classify import classify
from .config import Mode, ScenarioConfig
from .core import Color, PacketRecord, QosProfile, ResourceType
from .metering import (Conformance, MeterMatrix, MeterParams, MeterState,
                       aggregate_mark, trtcm_mark)
from .scheduler import EgressScheduler
from .tagging import tag as tag_packet
from .traffic import emit
from .units import NS_PER_S, div_round_half_up
from .wire import FrameSpec, frame_of_size, parse_frame


@dataclass
class FlowStats:
    """Per-flow counters; sent = delivered + meter_drops + queue_drops."""

    five_qi: int
    resource_type: ResourceType
    sent_pkts: int = 0
    sent_bytes: int = 0
    meter_drops: int = 0
    queue_drops: int = 0
    delivered_pkts: int = 0
    delivered_bytes: int = 0
    pdb_lost: int = 0
    window_delivered_bytes: list = field(default_factory=list)

    def loss_rate(self) -> float:
        if not self.sent_pkts:
            return 0.0
        return (self.meter_drops + self.queue_drops) / self.sent_pkts


@dataclass(frozen=True)
class QueueReport:
    queue_id: int
    tier: int
    enqueued: int
    tail_dropped: int
    dequeued: int
    max_delay_ns: int
    p50_delay_ns: int
    p99_delay_ns: int


@dataclass(frozen=True)
class Alert:
    window: int
    time_ns: int
    kind: str      # "delay_bound" or "gbr_pdb_98"
    subject: str   # "Q<n>" or "flow <teid>"
    value: float
    bound: float


@dataclass
class WindowSnapshot:
    """What the monitoring hook sees at each window boundary."""

    index: int
    start_ns: int
    end_ns: int
    queue_max_delay_ns: dict
    flow_delivered_bytes: dict
    flow_delivered_pkts: dict
    flow_pdb_exceeded: dict
    alerts: list


@dataclass
class RunMetrics:
    """Everything a run produces, before export."""

    scenario_name: str
    mode: Mode
    seed: int
    duration_ns: int
    capacity_bps: int
    offered_bps: int
    flows: dict
    queues: list
    analytics: AnalyticOutputs
    alerts: list
    reconfig_requests: list
    sim_end_ns: int
    wall_seconds: float

    def totals(self) -> dict:
        out = {"sent_pkts": 0, "sent_bytes": 0, "meter_drops": 0,
               "queue_drops": 0, "delivered_pkts": 0, "delivered_bytes": 0,
               "pdb_lost": 0}
        for st in self.flows.values():
            out["sent_pkts"] += st.sent_pkts
            out["sent_bytes"] += st.sent_bytes
            out["meter_drops"] += st.meter_drops
            out["queue_drops"] += st.queue_drops
            out["delivered_pkts"] += st.delivered_pkts
            out["delivered_bytes"] += st.delivered_bytes
            out["pdb_lost"] += st.pdb_lost
        return out


def pdb_account(pkt: PacketRecord, profile: QosProfile,
                delay_ns: int | None = None) -> bool:
    """True iff this delivered packet counts against its delay budget.

    Delay-critical classes treat any packet slower than the transport's
    share of the budget (the CN PDB) as lost; GBR packets feed the
    per-flow 98th-percentile rule.  Non-GBR traffic has no budget.  The
    packet itself is never retro-dropped, only counted.
    """
    if delay_ns is None:
        if pkt.departure_time_ns is None or pkt.ingress_ts_ns is None:
            raise ValueError("packet was not delivered")
        delay_ns = pkt.departure_time_ns - pkt.ingress_ts_ns
    rtype = profile.resource_type
    if rtype.delay_critical or rtype is ResourceType.GBR:
        return delay_ns > profile.cn_pdb_ns
    return False


def evaluate_window(snapshot: WindowSnapshot, tier0_bounds_ns: dict,
                    gbr_flows: set) -> list:
    """Default reconfiguration-hook logic: emit alert records.

    One alert per delay-critical queue whose window-max delay exceeds
    its buffer-drain bound, and one per GBR flow breaking the rule that
    98% of its packets stay within the delay budget.  No configuration
    change is applied.
    """
    alerts = []
    for qid in sorted(tier0_bounds_ns):
        measured = snapshot.queue_max_delay_ns.get(qid, 0)
        if measured > tier0_bounds_ns[qid]:
            alerts.append(Alert(
                window=snapshot.index, time_ns=snapshot.end_ns,
                kind="delay_bound", subject=f"Q{qid}",
                value=measured, bound=tier0_bounds_ns[qid],
            ))
    for teid in sorted(snapshot.flow_pdb_exceeded):
        if teid not in gbr_flows:
            continue
        delivered = snapshot.flow_delivered_pkts.get(teid, 0)
        exceeded = snapshot.flow_pdb_exceeded[teid]
        if delivered and exceeded / delivered > 0.02:
            alerts.append(Alert(
                window=snapshot.index, time_ns=snapshot.end_ns,
                kind="gbr_pdb_98", subject=f"flow {teid}",
                value=1.0 - exceeded / delivered, bound=0.98,
            ))
    return alerts


class _FlowCtx:
    """Per-flow fast path: profile facts plus a verdict -> route table."""

    __slots__ = ("five_qi", "profile", "stats", "meter", "uses_trtcm",
                 "route", "cn_pdb_ns", "tracks_pdb", "is_gbr")

    def __init__(self, five_qi, profile, stats, meter, uses_trtcm, route):
        self.five_qi = five_qi
        self.profile = profile
        self.stats = stats
        self.meter = meter
        self.uses_trtcm = uses_trtcm
        self.route = route
        self.cn_pdb_ns = profile.cn_pdb_ns
        rtype = profile.resource_type
        self.is_gbr = rtype is ResourceType.GBR
        self.tracks_pdb = rtype.delay_critical or self.is_gbr


def _baseline_meter(cfg: ScenarioConfig) -> MeterState | None:
    """One shared two-rate meter aggregating every metered flow's budget."""
    cir = pir = cbs = pbs = 0
    for fs in cfg.flows:
        params = cfg.per_flow_meters.get(fs.five_qi)
        if params is None:
            continue  # Non-GBR flows keep their aggregate meters
        cir += params.cir_bps
        pir += params.pir_bps
        cbs += params.cbs_bytes
        pbs += params.pbs_bytes
    if pir == 0:
        return None
    return MeterState(MeterParams(cir, pir, cbs, pbs))


def run(cfg: ScenarioConfig, reconfigure=None) -> RunMetrics:
    """Execute a scenario and return its metrics.

    ``reconfigure`` is an optional callable receiving a WindowSnapshot at
    every measurement-window boundary; whatever it returns (non-None) is
    recorded as a requested configuration delta.  Deltas are never
    applied mid-run.
    """
    wall_start = time.perf_counter()
    cfg.validate()

    analytics = scenario_analytics(cfg)
    sched = EgressScheduler(cfg.queue_map, cfg.link.capacity_bps)
    matrix = MeterMatrix(cfg.per_flow_meters, cfg.aggregate_meters,
                         cfg.meter_limits)
    shared = _baseline_meter(cfg) if cfg.mode is Mode.BASELINE else None

    specs = {f.teid: f for f in cfg.flows}
    flow_stats: dict[int, FlowStats] = {}
    ctxs: dict[int, _FlowCtx] = {}

    tier0_bounds = {
        qc.queue_id: div_round_half_up(qc.buffer_bytes * 8 * NS_PER_S,
                                       cfg.link.capacity_bps)
        for qc in cfg.queue_map.configs if qc.tier == 0
    }

    def make_ctx(teid: int) -> _FlowCtx:
        fs = specs[teid]
        frame = frame_of_size(
            FrameSpec(teid=teid, inner_src_port=fs.inner_src_port),
            fs.frame_size_bytes,
        )
        cls = classify(parse_frame(frame), cfg.port_map, cfg.profiles)
        profile = cls.profile
        stats = FlowStats(five_qi=cls.five_qi,
                          resource_type=profile.resource_type)
        flow_stats[teid] = stats
        aggregate = matrix.is_aggregate(cls.five_qi)
        if shared is not None and not aggregate:
            meter, uses_trtcm = shared, True
        else:
            meter = matrix.meter_for(cls.five_qi, teid)
            uses_trtcm = not aggregate
        marks = ((Color.GREEN, Color.YELLOW, Color.RED) if uses_trtcm
                 else (Conformance.CONFORM, Conformance.EXCEED))
        route = {}
        for mark in marks:
            service = tag_packet(mark, profile, cfg.policy)
            route[mark] = (None if service is None else
                           (service, sched.select(service,
                                                  profile.resource_type)))
        ctx = _FlowCtx(cls.five_qi, profile, stats, meter, uses_trtcm, route)
        ctxs[teid] = ctx
        return ctx

    # -- measurement windows ------------------------------------------

    window_ns = cfg.measurement_window_ns
    win_index = 0
    win_end = window_ns
    win_queue_max: dict[int, int] = {}
    win_delivered_bytes: dict[int, int] = {}
    win_delivered_pkts: dict[int, int] = {}
    win_pdb: dict[int, int] = {}
    alerts: list[Alert] = []
    reconfig_requests: list = []
    gbr_flows: set[int] = set()

    def close_window():
        nonlocal win_index, win_end, win_queue_max
        nonlocal win_delivered_bytes, win_delivered_pkts, win_pdb
        snapshot = WindowSnapshot(
            index=win_index, start_ns=win_end - window_ns, end_ns=win_end,
            queue_max_delay_ns=win_queue_max,
            flow_delivered_bytes=win_delivered_bytes,
            flow_delivered_pkts=win_delivered_pkts,
            flow_pdb_exceeded=win_pdb,
            alerts=[],
        )
        snapshot.alerts = evaluate_window(snapshot, tier0_bounds, gbr_flows)
        alerts.extend(snapshot.alerts)
        if reconfigure is not None:
            delta = reconfigure(snapshot)
            if delta is not None:
                reconfig_requests.append({"window": win_index, "delta": delta})
        for teid, st in flow_stats.items():
            st.window_delivered_bytes.append(win_delivered_bytes.get(teid, 0))
        win_index += 1
        win_end += window_ns
        win_queue_max = {}
        win_delivered_bytes = {}
        win_delivered_pkts = {}
        win_pdb = {}

    def advance_windows(t: int):
        while t >= win_end:
            close_window()

    # -- main loop ------------------------------------------------------

    def account_departure(pkt: PacketRecord, start_ns: int):
        ctx = ctxs[pkt.flow_id]
        st = ctx.stats
        size = pkt.size_bytes
        st.delivered_pkts += 1
        st.delivered_bytes += size
        win_delivered_bytes[pkt.flow_id] = (
            win_delivered_bytes.get(pkt.flow_id, 0) + size)
        win_delivered_pkts[pkt.flow_id] = (
            win_delivered_pkts.get(pkt.flow_id, 0) + 1)
        delay = start_ns - pkt.ingress_ts_ns
        qid = pkt.queue_id
        if delay > win_queue_max.get(qid, -1):
            win_queue_max[qid] = delay
        if ctx.tracks_pdb and delay > ctx.cn_pdb_ns:
            st.pdb_lost += 1
            win_pdb[pkt.flow_id] = win_pdb.get(pkt.flow_id, 0) + 1

    stream = emit(list(cfg.flows), cfg.seed, cfg.duration_ns)
    dequeue_next = sched.dequeue_next

    for pkt in stream:
        ta = pkt.arrival_time_ns
        while sched.backlog_pkts and sched.busy_until_ns < ta:
            s = sched.busy_until_ns
            served = dequeue_next(s)
            advance_windows(s)
            account_departure(served, s)
        advance_windows(ta)
        teid = pkt.flow_id
        ctx = ctxs.get(teid)
        if ctx is None:
            ctx = make_ctx(teid)
            if ctx.is_gbr:
                gbr_flows.add(teid)
        st = ctx.stats
        size = pkt.size_bytes
        st.sent_pkts += 1
        st.sent_bytes += size
        pkt.ingress_ts_ns = ta
        pkt.five_qi = ctx.five_qi
        pkt.resource_type = ctx.profile.resource_type
        pkt.priority_level = ctx.profile.priority_level
        if ctx.uses_trtcm:
            mark = trtcm_mark(ctx.meter, ta, size)
        else:
            mark = aggregate_mark(ctx.meter, ta, size)
        pkt.color = mark
        route = ctx.route[mark]
        if route is None:
            st.meter_drops += 1
            continue
        pkt.service_tag, pkt.queue_id = route
        if sched.enqueue(pkt, pkt.queue_id):
            if sched.busy_until_ns < ta:
                sched.busy_until_ns = ta
        else:
            st.queue_drops += 1

    # Drain: no further arrivals, serve until every queue is empty.
    while sched.backlog_pkts:
        s = sched.busy_until_ns
        served = dequeue_next(s)
        advance_windows(s)
        account_departure(served, s)

    sim_end = max(sched.busy_until_ns, cfg.duration_ns)
    advance_windows(sim_end)
    if win_delivered_bytes or win_queue_max:
        close_window()

    # Flows that never emitted a packet still get a metrics row.
    for fs in cfg.flows:
        if fs.teid not in flow_stats:
            profile = cfg.profiles.get(fs.five_qi)
            flow_stats[fs.teid] = FlowStats(
                five_qi=fs.five_qi, resource_type=profile.resource_type)

    queues = []
    for qc in cfg.queue_map.configs:
        st = sched.stats(qc.queue_id)
        if len(st.delays_ns):
            arr = np.frombuffer(st.delays_ns, dtype=np.int64)
            p50 = int(np.percentile(arr, 50) + 0.5)
            p99 = int(np.percentile(arr, 99) + 0.5)
        else:
            p50 = p99 = 0
        queues.append(QueueReport(
            queue_id=qc.queue_id, tier=qc.tier, enqueued=st.enqueued,
            tail_dropped=st.tail_dropped, dequeued=st.dequeued,
            max_delay_ns=st.max_delay_ns, p50_delay_ns=p50, p99_delay_ns=p99,
        ))

    return RunMetrics(
        scenario_name=cfg.name,
        mode=cfg.mode,
        seed=cfg.seed,
        duration_ns=cfg.duration_ns,
        capacity_bps=cfg.link.capacity_bps,
        offered_bps=cfg.offered_bps(),
        flows=dict(sorted(flow_stats.items())),
        queues=queues,
        analytics=analytics,
        alerts=alerts,
        reconfig_requests=reconfig_requests,
        sim_end_ns=sim_end,
        wall_seconds=time.perf_counter() - wall_start,
    )


def scenario_analytics(cfg: ScenarioConfig) -> AnalyticOutputs:
    """Derive the analytic model inputs from a scenario and evaluate them.

    Guaranteed flows take their committed/peak rates from the per-flow
    meter configuration; the Non-GBR aggregate is the sum of all
    configured aggregate meters (a worst case, since each could fill its
    own budget); the buffer bound is the top-tier queue's.
    """
    guaranteed = []
    for fs in cfg.flows:
        params = cfg.per_flow_meters.get(fs.five_qi)
        if params is None:
            continue
        profile = cfg.profiles.get(fs.five_qi)
        guaranteed.append(GuaranteedFlow(
            five_qi=fs.five_qi,
            cir_bps=params.cir_bps,
            pir_bps=params.pir_bps,
            prioritized=cfg.policy.is_prioritized(profile),
        ))
    pir_ng = sum(m.pir_bps for m in cfg.aggregate_meters.values())
    tier0 = [qc for qc in cfg.queue_map.configs if qc.tier == 0]
    buffer_bits = (tier0[0].buffer_bytes * 8 if tier0
                   else cfg.queue_map.configs[0].buffer_bytes * 8)
    inputs = AnalyticInputs(
        link_rate_bps=cfg.link.capacity_bps,
        guaranteed_flows=tuple(guaranteed),
        nongbr_aggregate_pir_bps=pir_ng,
        nongbr_prioritized_fraction=cfg.policy.nongbr_prioritized_fraction,
        buffer_bits=buffer_bits,
    )
    return analyze(inputs)
