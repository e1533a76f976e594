"""Scenario builders for the reference experiments.

Each preset produces a complete :class:`~qosplane.config.ScenarioConfig`:
profile rows, port-range mapping, meter parameters, policy, queues and
the flow population.  ``scale`` divides flow counts and the link rate by
the same factor (aggregate meter budgets follow the link), preserving
every offered-load/capacity ratio so a desk-scale run reproduces the
full-scale behavior.

Flows inside a group are phase-staggered across one inter-arrival gap,
which is how independent constant-rate sources look in practice and
keeps instantaneous bursts representative rather than synchronized.
"""

from dataclasses import dataclass

from .classify import PortRange, PortRangeMap, ProfileTable
from .config import Mode, ScenarioConfig
from .core import LinkConfig, QosProfile, ResourceType
from .metering import CapacityLimits, MeterParams
from .scheduler import default_queue_map
from .tagging import PolicyConfig
from .traffic import FlowSpec
from .units import GBPS, KBPS, MBPS, NS_PER_S, ms_to_ns, round_half_up


class UnknownPreset(KeyError):
    """No preset registered under this name."""


FRAME_BYTES = 1500
DEFAULT_SEED = 42
_BASE_PORT = 20000
_PORTS_PER_QI = 1000


@dataclass(frozen=True)
class FlowGroup:
    """A homogeneous batch of flows within one 5QI."""

    count: int
    five_qi: int
    rate_bps: int
    jitter_fraction: float = 0.0


def _scaled(count: int, scale: int) -> int:
    if scale < 1:
        raise ValueError("scale must be >= 1")
    return max(1, round_half_up(count / scale))


def _port_base(index: int) -> int:
    return _BASE_PORT + index * _PORTS_PER_QI


def _build_flows(groups: list[FlowGroup],
                 port_index: dict[int, int]) -> tuple[FlowSpec, ...]:
    """Sequential TEIDs, round-robin ports, per-group phase stagger."""
    flows = []
    teid = 1
    port_cursor: dict[int, int] = {}
    for g in groups:
        gap = FRAME_BYTES * 8 * NS_PER_S // g.rate_bps
        for j in range(g.count):
            base = _port_base(port_index[g.five_qi])
            cursor = port_cursor.get(g.five_qi, 0)
            port = base + cursor % _PORTS_PER_QI
            port_cursor[g.five_qi] = cursor + 1
            flows.append(FlowSpec(
                teid=teid,
                five_qi=g.five_qi,
                inner_src_port=port,
                rate_bps=g.rate_bps,
                frame_size_bytes=FRAME_BYTES,
                start_ns=j * gap // g.count,
                jitter_fraction=g.jitter_fraction,
            ))
            teid += 1
    return tuple(flows)


def _port_map(port_index: dict[int, int], default_five_qi: int) -> PortRangeMap:
    ranges = [
        PortRange(_port_base(i), _port_base(i) + _PORTS_PER_QI - 1, qi)
        for qi, i in sorted(port_index.items())
    ]
    return PortRangeMap(ranges, default_five_qi=default_five_qi)


def _assemble(name, link_bps, profiles, port_index, default_qi, per_flow,
              aggregate, groups, policy, duration_ms, seed, mode) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        link=LinkConfig(capacity_bps=link_bps),
        profiles=ProfileTable(profiles),
        port_map=_port_map(port_index, default_qi),
        per_flow_meters=per_flow,
        aggregate_meters=aggregate,
        meter_limits=CapacityLimits(),
        policy=policy,
        queue_map=default_queue_map(link_bps),
        flows=_build_flows(groups, port_index),
        duration_ns=ms_to_ns(duration_ms),
        seed=DEFAULT_SEED if seed is None else seed,
        mode=mode,
        measurement_window_ns=ms_to_ns(100),
    )


def _profile(qi, rtype, prio, pdb_ms, cn_pdb_ms, per, gfbr=None, mfbr=None,
             mdbv=None) -> QosProfile:
    return QosProfile(
        five_qi=qi, resource_type=rtype, priority_level=prio,
        pdb_ns=ms_to_ns(pdb_ms), cn_pdb_ns=ms_to_ns(cn_pdb_ms), per=per,
        gfbr_bps=gfbr, mfbr_bps=mfbr, mdbv_bytes=mdbv,
    )


# -- functional evaluation: four classes filling the link ------------------

_FUNCTIONAL_LOADS = {
    "functional-low": (1000, 10_000 * KBPS),
    "functional-medium": (2000, 5_000 * KBPS),
    "functional-high": (4000, 2_500 * KBPS),
}


def _functional(name: str, scale: int, seed, mode) -> ScenarioConfig:
    total, rate = _FUNCTIONAL_LOADS[name]
    per_qi = _scaled(total // 4, scale)
    link = 10 * GBPS // scale
    gfbr = rate // 2  # sources transmit at their maximum rate, twice the GFBR
    cbs, pbs = 12_500, 62_500  # 100 Kb / 500 Kb
    profiles = [
        _profile(2, ResourceType.GBR, 40, 150, 20, 1e-3, gfbr, rate),
        _profile(84, ResourceType.GBR_DC, 24, 30, 5, 1e-5, gfbr, rate, mdbv=pbs),
        _profile(7, ResourceType.NON_GBR, 70, 100, 20, 1e-3),
        _profile(80, ResourceType.NON_GBR_DC, 68, 10, 2, 1e-6, gfbr, rate,
                 mdbv=pbs),
    ]
    port_index = {2: 0, 84: 1, 7: 2, 80: 3}
    trtcm = MeterParams(gfbr, rate, cbs, pbs)
    per_flow = {2: trtcm, 84: trtcm, 80: trtcm}
    ng_pir = per_qi * rate
    aggregate = {7: MeterParams.single_rate(ng_pir, ng_pir // 80)}
    groups = [
        FlowGroup(per_qi, 2, rate),
        FlowGroup(per_qi, 84, rate),
        FlowGroup(per_qi, 7, rate),
        FlowGroup(per_qi, 80, rate),
    ]
    policy = PolicyConfig(priority_threshold=10, nongbr_prioritized_fraction=0.0)
    return _assemble(name, link, profiles, port_index, 7, per_flow, aggregate,
                     groups, policy, 2000, seed, mode)


# -- per-flow guarantee versus a single slice meter -------------------------

def _baseline_compare(scale: int, seed, mode) -> ScenarioConfig:
    count = _scaled(2000, scale)
    link = 10 * GBPS // scale
    cir, pir = 4_000 * KBPS, 7_000 * KBPS
    profiles = [
        _profile(2, ResourceType.GBR, 40, 150, 20, 1e-3, cir, pir),
        _profile(9, ResourceType.NON_GBR, 79, 100, 20, 1e-3),  # default target
    ]
    port_index = {2: 0, 9: 1}
    per_flow = {2: MeterParams(cir, pir, 12_500, 62_500)}
    aggregate = {9: MeterParams.single_rate(100 * MBPS // scale,
                                            100 * MBPS // scale // 80)}
    half = count // 2
    groups = [
        FlowGroup(half, 2, cir, jitter_fraction=0.1),
        FlowGroup(count - half, 2, pir, jitter_fraction=0.1),
    ]
    policy = PolicyConfig(priority_threshold=10)
    return _assemble("baseline-compare", link, profiles, port_index, 9,
                     per_flow, aggregate, groups, policy, 2000, seed, mode)


# -- severe congestion with prioritized classes -----------------------------

def _high_congestion(scale: int, seed, mode) -> ScenarioConfig:
    link = 10 * GBPS // scale
    dc_pbs = 62_500
    profiles = [
        _profile(1, ResourceType.NON_GBR, 50, 100, 20, 1e-3),
        _profile(2, ResourceType.NON_GBR, 5, 100, 20, 1e-3),
        _profile(3, ResourceType.GBR, 50, 150, 20, 1e-3,
                 2_500 * KBPS, 6_000 * KBPS),
        _profile(4, ResourceType.GBR, 5, 150, 20, 1e-3,
                 2_500 * KBPS, 6_000 * KBPS),
        _profile(5, ResourceType.GBR_DC, 30, 10, 5, 1e-5,
                 2_500 * KBPS, 6_000 * KBPS, mdbv=dc_pbs),
        _profile(6, ResourceType.NON_GBR_DC, 60, 10, 5, 1e-6,
                 2_500 * KBPS, 6_000 * KBPS, mdbv=dc_pbs),
    ]
    port_index = {qi: qi - 1 for qi in (1, 2, 3, 4, 5, 6)}
    trtcm = MeterParams(2_500 * KBPS, 6_000 * KBPS, 12_500, 62_500)
    per_flow = {3: trtcm, 4: trtcm, 5: trtcm, 6: trtcm}
    ng_pir = 2_850_000 * KBPS // scale
    ng_pbs = 35_625_000 // scale  # 285 Mb of burst at full scale
    aggregate = {
        1: MeterParams.single_rate(ng_pir, ng_pbs),
        2: MeterParams.single_rate(ng_pir, ng_pbs),
    }
    groups = [
        FlowGroup(_scaled(450, scale), 1, 6_000 * KBPS),  # background Non-GBR
        FlowGroup(_scaled(50, scale), 2, 4_000 * KBPS),   # prioritized Non-GBR
        FlowGroup(_scaled(450, scale), 3, 6_000 * KBPS),  # background GBR
        FlowGroup(_scaled(50, scale), 3, 1_500 * KBPS),   # below-CIR GBR
        FlowGroup(_scaled(25, scale), 4, 6_000 * KBPS),   # prioritized GBR
        FlowGroup(_scaled(25, scale), 4, 5_000 * KBPS),   # prioritized GBR
        FlowGroup(_scaled(450, scale), 5, 6_000 * KBPS),  # background GBR*
        FlowGroup(_scaled(450, scale), 6, 6_000 * KBPS),  # background Non-GBR*
    ]
    policy = PolicyConfig(priority_threshold=10, nongbr_prioritized_fraction=0.5)
    return _assemble("high-congestion", link, profiles, port_index, 1,
                     per_flow, aggregate, groups, policy, 2000, seed, mode)


# -- small-scale scenarios with per-flow visibility -------------------------

def _appendix_small(scale: int, seed, mode) -> ScenarioConfig:
    link = 10 * GBPS // scale

    def burst(rate_bps: int) -> int:
        return rate_bps // 800  # 10 ms of burst, in bytes

    profiles = [
        _profile(0, ResourceType.GBR, 50, 100, 20, 1e-3, 500 * MBPS, 1 * GBPS),
        _profile(1, ResourceType.GBR, 5, 100, 20, 1e-3, 500 * MBPS, 1 * GBPS),
        _profile(2, ResourceType.GBR_DC, 25, 10, 5, 1e-5, 500 * MBPS, 1 * GBPS,
                 mdbv=burst(1 * GBPS)),
        _profile(3, ResourceType.NON_GBR, 50, 100, 20, 1e-3),
        _profile(4, ResourceType.NON_GBR, 5, 100, 20, 1e-3),
        _profile(5, ResourceType.NON_GBR_DC, 60, 10, 5, 1e-6,
                 250 * MBPS, 500 * MBPS, mdbv=burst(500 * MBPS)),
    ]
    port_index = {qi: qi for qi in range(6)}
    gbr_meter = MeterParams(500 * MBPS, 1 * GBPS, burst(500 * MBPS),
                            burst(1 * GBPS))
    per_flow = {
        0: gbr_meter,
        1: gbr_meter,
        2: gbr_meter,
        5: MeterParams(250 * MBPS, 500 * MBPS, burst(250 * MBPS),
                       burst(500 * MBPS)),
    }
    ng_pir = 2500 * MBPS // scale
    aggregate = {
        3: MeterParams.single_rate(ng_pir, burst(ng_pir)),
        4: MeterParams.single_rate(ng_pir, burst(ng_pir)),
    }
    # GBR sources sit between their committed and peak rates; the
    # delay-critical classes hold at their committed rate; the four
    # Non-GBR sources together fill the aggregate peak.
    groups = [
        FlowGroup(_scaled(6, scale), 0, 750 * MBPS),
        FlowGroup(_scaled(1, scale), 1, 750 * MBPS),
        FlowGroup(_scaled(4, scale), 2, 500 * MBPS),
        FlowGroup(_scaled(3, scale), 3, 625 * MBPS, jitter_fraction=0.1),
        FlowGroup(_scaled(1, scale), 4, 625 * MBPS, jitter_fraction=0.1),
        FlowGroup(_scaled(4, scale), 5, 250 * MBPS),
    ]
    policy = PolicyConfig(priority_threshold=10, nongbr_prioritized_fraction=0.25)
    return _assemble("appendix-small", link, profiles, port_index, 3,
                     per_flow, aggregate, groups, policy, 1000, seed, mode)


def _appendix_baseline(scale: int, seed, mode) -> ScenarioConfig:
    link = 10 * GBPS // scale
    profiles = [
        _profile(0, ResourceType.GBR, 50, 100, 20, 1e-3, 500 * MBPS, 1 * GBPS),
        _profile(9, ResourceType.NON_GBR, 79, 100, 20, 1e-3),
    ]
    port_index = {0: 0, 9: 1}
    per_flow = {0: MeterParams(500 * MBPS, 1 * GBPS, 625_000, 1_250_000)}
    aggregate = {9: MeterParams.single_rate(100 * MBPS // scale,
                                            100 * MBPS // scale // 80)}
    groups = [
        FlowGroup(_scaled(8, scale), 0, 500 * MBPS, jitter_fraction=0.1),
        FlowGroup(_scaled(8, scale), 0, 1 * GBPS, jitter_fraction=0.1),
    ]
    policy = PolicyConfig(priority_threshold=10)
    return _assemble("appendix-baseline", link, profiles, port_index, 9,
                     per_flow, aggregate, groups, policy, 2000, seed, mode)


_BUILDERS = {
    "functional-low": _functional,
    "functional-medium": _functional,
    "functional-high": _functional,
    "baseline-compare": lambda name, scale, seed, mode:
        _baseline_compare(scale, seed, mode),
    "high-congestion": lambda name, scale, seed, mode:
        _high_congestion(scale, seed, mode),
    "appendix-small": lambda name, scale, seed, mode:
        _appendix_small(scale, seed, mode),
    "appendix-baseline": lambda name, scale, seed, mode:
        _appendix_baseline(scale, seed, mode),
}


def list_presets() -> list[str]:
    return sorted(_BUILDERS)


def build(name: str, scale: int = 1, seed: int | None = None,
          mode: Mode = Mode.FLOW) -> ScenarioConfig:
    """Build a preset scenario, optionally desk-scaled.

    Raises:
        UnknownPreset: for names not in :func:`list_presets`.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownPreset(
            f"unknown preset {name!r}; known: {', '.join(list_presets())}"
        ) from None
    cfg = builder(name, scale, seed, mode)
    cfg.validate()
    return cfg
