"""Scenario configuration: one JSON document describing a whole run.

Top-level keys: ``link``, ``profiles``, ``port_map``, ``meters``,
``policy``, ``queues``, ``flows`` or ``preset``, ``duration_ms``,
``seed``, ``mode``, ``measurement_window_ms``.  Unknown keys are
rejected.  Validation cross-checks every reference (ports to profiles,
flows to meters, quanta to frame sizes) so a run can only start from a
coherent scenario.
"""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .classify import (PortRange, PortRangeMap, ProfileTable,
                       check_map_against_table)
from .core import LinkConfig, QosProfile, ResourceType, ServiceTag
from .metering import CapacityLimits, MeterParams
from .scheduler import MapEntry, QueueConfig, QueueMap, default_queue_map
from .tagging import PolicyConfig
from .traffic import FlowSpec
from .units import ms_to_ns


class ConfigError(ValueError):
    """The scenario document is malformed or internally inconsistent."""


class Mode(Enum):
    FLOW = "FLOW"          # per-flow meter matrix (this pipeline)
    BASELINE = "BASELINE"  # one aggregate meter shared by all metered flows


@dataclass
class ScenarioConfig:
    """A fully resolved scenario, ready to run."""

    name: str
    link: LinkConfig
    profiles: ProfileTable
    port_map: PortRangeMap
    per_flow_meters: dict[int, MeterParams]
    aggregate_meters: dict[int, MeterParams]
    meter_limits: CapacityLimits
    policy: PolicyConfig
    queue_map: QueueMap
    flows: tuple[FlowSpec, ...]
    duration_ns: int
    seed: int
    mode: Mode = Mode.FLOW
    measurement_window_ns: int = ms_to_ns(100)

    def validate(self) -> None:
        if self.duration_ns <= 0:
            raise ConfigError("duration must be positive")
        if self.measurement_window_ns <= 0:
            raise ConfigError("measurement window must be positive")
        try:
            check_map_against_table(self.port_map, self.profiles)
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        for qi in self.per_flow_meters:
            if qi not in self.profiles:
                raise ConfigError(f"per-flow meter for unknown 5QI {qi}")
            if self.profiles.get(qi).resource_type is ResourceType.NON_GBR:
                raise ConfigError(f"5QI {qi} is Non-GBR; use an aggregate meter")
        for qi in self.aggregate_meters:
            if qi not in self.profiles:
                raise ConfigError(f"aggregate meter for unknown 5QI {qi}")
            if self.profiles.get(qi).resource_type is not ResourceType.NON_GBR:
                raise ConfigError(f"5QI {qi} is not Non-GBR; use per-flow meters")
        max_frame = max((f.frame_size_bytes for f in self.flows), default=1500)
        for qc in self.queue_map.configs:
            if qc.dwrr_quantum < max_frame:
                raise ConfigError(
                    f"Q{qc.queue_id} quantum {qc.dwrr_quantum} below the "
                    f"largest frame ({max_frame} B)"
                )
        for fs in self.flows:
            resolved = self.port_map.lookup(fs.inner_src_port)
            if resolved != fs.five_qi:
                raise ConfigError(
                    f"flow {fs.teid}: port {fs.inner_src_port} classifies to "
                    f"5QI {resolved}, spec says {fs.five_qi}"
                )
            profile = self.profiles.get(fs.five_qi)
            if profile.resource_type is ResourceType.NON_GBR:
                if fs.five_qi not in self.aggregate_meters:
                    raise ConfigError(f"no aggregate meter for 5QI {fs.five_qi}")
            elif fs.five_qi not in self.per_flow_meters:
                raise ConfigError(f"no per-flow meter for 5QI {fs.five_qi}")

    def offered_bps(self) -> int:
        return sum(f.rate_bps for f in self.flows)


# -- JSON (de)serialization -----------------------------------------------

_TOP_KEYS = {"name", "link", "profiles", "port_map", "meters", "policy",
             "queues", "flows", "preset", "scale", "duration_ms", "seed",
             "mode", "measurement_window_ms"}

# Keys that make sense next to "preset" (everything else comes from the
# preset itself).
_PRESET_KEYS = {"name", "preset", "scale", "seed", "mode", "duration_ms",
                "measurement_window_ms"}

_SERVICE_TAGS = {t.name: t for t in ServiceTag}


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing key {key!r} in {where}")
    return obj[key]


def _profile_from_json(obj: dict) -> QosProfile:
    _reject_unknown(obj, {"five_qi", "resource_type", "priority_level",
                          "pdb_ms", "cn_pdb_ms", "per", "gfbr_bps",
                          "mfbr_bps", "averaging_window_ms", "mdbv_bytes"},
                    "profile")
    aw = obj.get("averaging_window_ms")
    return QosProfile(
        five_qi=_require(obj, "five_qi", "profile"),
        resource_type=ResourceType.from_text(
            _require(obj, "resource_type", "profile")),
        priority_level=_require(obj, "priority_level", "profile"),
        pdb_ns=ms_to_ns(_require(obj, "pdb_ms", "profile")),
        cn_pdb_ns=ms_to_ns(_require(obj, "cn_pdb_ms", "profile")),
        per=_require(obj, "per", "profile"),
        gfbr_bps=obj.get("gfbr_bps"),
        mfbr_bps=obj.get("mfbr_bps"),
        averaging_window_ns=ms_to_ns(aw) if aw is not None else None,
        mdbv_bytes=obj.get("mdbv_bytes"),
    )


def _profile_to_json(p: QosProfile) -> dict:
    out = {
        "five_qi": p.five_qi,
        "resource_type": p.resource_type.name,
        "priority_level": p.priority_level,
        "pdb_ms": p.pdb_ns / ms_to_ns(1),
        "cn_pdb_ms": p.cn_pdb_ns / ms_to_ns(1),
        "per": p.per,
    }
    if p.gfbr_bps is not None:
        out["gfbr_bps"] = p.gfbr_bps
        out["mfbr_bps"] = p.mfbr_bps
    if p.averaging_window_ns is not None:
        out["averaging_window_ms"] = p.averaging_window_ns / ms_to_ns(1)
    if p.mdbv_bytes is not None:
        out["mdbv_bytes"] = p.mdbv_bytes
    return out


def _queue_from_json(obj: dict) -> QueueConfig:
    _reject_unknown(obj, {"queue_id", "tier", "resource_binding",
                          "buffer_bytes", "dwrr_quantum_bytes",
                          "reserved_rate_bps"}, "queue")
    binding = _require(obj, "resource_binding", "queue")
    return QueueConfig(
        queue_id=_require(obj, "queue_id", "queue"),
        tier=_require(obj, "tier", "queue"),
        resource_binding=None if binding == "ANY"
        else ResourceType.from_text(binding),
        buffer_bytes=_require(obj, "buffer_bytes", "queue"),
        dwrr_quantum=_require(obj, "dwrr_quantum_bytes", "queue"),
        reserved_rate_bps=obj.get("reserved_rate_bps"),
    )


def from_json(doc: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "scenario")
    if "preset" in doc:
        _reject_unknown(doc, _PRESET_KEYS, "preset scenario")
        from . import presets  # local import: presets builds configs too

        cfg = presets.build(
            doc["preset"],
            scale=doc.get("scale", 1),
            seed=doc.get("seed"),
            mode=Mode(doc.get("mode", "FLOW")),
        )
        if "duration_ms" in doc:
            cfg.duration_ns = ms_to_ns(doc["duration_ms"])
        if "measurement_window_ms" in doc:
            cfg.measurement_window_ns = ms_to_ns(doc["measurement_window_ms"])
        cfg.validate()
        return cfg

    try:
        link = LinkConfig(capacity_bps=_require(
            _require(doc, "link", "scenario"), "capacity_bps", "link"))
        profiles = ProfileTable(
            [_profile_from_json(p) for p in _require(doc, "profiles", "scenario")]
        )
        pm = _require(doc, "port_map", "scenario")
        _reject_unknown(pm, {"ranges", "default_five_qi"}, "port_map")
        port_map = PortRangeMap(
            [PortRange(r["lo"], r["hi"], r["five_qi"]) for r in pm["ranges"]],
            default_five_qi=_require(pm, "default_five_qi", "port_map"),
        )
        meters = _require(doc, "meters", "scenario")
        _reject_unknown(meters, {"per_flow", "aggregate", "limits"}, "meters")
        per_flow = {
            int(qi): MeterParams(m["cir_bps"], m["pir_bps"],
                                 m["cbs_bytes"], m["pbs_bytes"])
            for qi, m in meters.get("per_flow", {}).items()
        }
        aggregate = {
            int(qi): MeterParams.single_rate(m["pir_bps"], m["pbs_bytes"])
            for qi, m in meters.get("aggregate", {}).items()
        }
        lim = meters.get("limits", {})
        limits = CapacityLimits(
            per_array_max=lim.get("per_array_max", 8192),
            total_max=lim.get("total_max", 24576),
            max_arrays=lim.get("max_arrays", 23),
        )
        pol = _require(doc, "policy", "scenario")
        _reject_unknown(pol, {"priority_threshold", "nongbr_prioritized_fraction",
                              "low_value_is_important"}, "policy")
        policy = PolicyConfig(
            priority_threshold=_require(pol, "priority_threshold", "policy"),
            nongbr_prioritized_fraction=pol.get("nongbr_prioritized_fraction", 0.0),
            low_value_is_important=pol.get("low_value_is_important", True),
        )
        queues = doc.get("queues")
        if queues is None:
            queue_map = default_queue_map(link.capacity_bps)
        else:
            _reject_unknown(queues, {"queues", "map"}, "queues")
            queue_map = QueueMap(
                [_queue_from_json(q) for q in queues["queues"]],
                [MapEntry(
                    _SERVICE_TAGS[e["service_tag"]],
                    None if e["resource_type"] == "ANY"
                    else ResourceType.from_text(e["resource_type"]),
                    e["queue_id"],
                ) for e in queues["map"]],
            )
        flows = tuple(
            FlowSpec(
                teid=f["teid"],
                five_qi=f["five_qi"],
                inner_src_port=f["inner_src_port"],
                rate_bps=f["rate_bps"],
                frame_size_bytes=f["frame_size_bytes"],
                start_ns=ms_to_ns(f.get("start_ms", 0)),
                stop_ns=ms_to_ns(f["stop_ms"]) if f.get("stop_ms") is not None
                else None,
                jitter_fraction=f.get("jitter_fraction", 0.0),
            )
            for f in _require(doc, "flows", "scenario")
        )
        cfg = ScenarioConfig(
            name=doc.get("name", "custom"),
            link=link,
            profiles=profiles,
            port_map=port_map,
            per_flow_meters=per_flow,
            aggregate_meters=aggregate,
            meter_limits=limits,
            policy=policy,
            queue_map=queue_map,
            flows=flows,
            duration_ns=ms_to_ns(_require(doc, "duration_ms", "scenario")),
            seed=doc.get("seed", 0),
            mode=Mode(doc.get("mode", "FLOW")),
            measurement_window_ns=ms_to_ns(doc.get("measurement_window_ms", 100)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario document: {exc}") from exc
    cfg.validate()
    return cfg


def to_json(cfg: ScenarioConfig) -> dict:
    """Serialize a config back to the JSON document shape."""
    return {
        "name": cfg.name,
        "link": {"capacity_bps": cfg.link.capacity_bps},
        "profiles": [_profile_to_json(p) for p in cfg.profiles],
        "port_map": {
            "ranges": [
                {"lo": r.lo, "hi": r.hi, "five_qi": r.five_qi}
                for r in cfg.port_map.ranges
            ],
            "default_five_qi": cfg.port_map.default_five_qi,
        },
        "meters": {
            "per_flow": {
                str(qi): {"cir_bps": m.cir_bps, "pir_bps": m.pir_bps,
                          "cbs_bytes": m.cbs_bytes, "pbs_bytes": m.pbs_bytes}
                for qi, m in sorted(cfg.per_flow_meters.items())
            },
            "aggregate": {
                str(qi): {"pir_bps": m.pir_bps, "pbs_bytes": m.pbs_bytes}
                for qi, m in sorted(cfg.aggregate_meters.items())
            },
            "limits": {
                "per_array_max": cfg.meter_limits.per_array_max,
                "total_max": cfg.meter_limits.total_max,
                "max_arrays": cfg.meter_limits.max_arrays,
            },
        },
        "policy": {
            "priority_threshold": cfg.policy.priority_threshold,
            "nongbr_prioritized_fraction": cfg.policy.nongbr_prioritized_fraction,
            "low_value_is_important": cfg.policy.low_value_is_important,
        },
        "queues": {
            "queues": [
                {
                    "queue_id": qc.queue_id,
                    "tier": qc.tier,
                    "resource_binding": (qc.resource_binding.name
                                         if qc.resource_binding else "ANY"),
                    "buffer_bytes": qc.buffer_bytes,
                    "dwrr_quantum_bytes": qc.dwrr_quantum,
                    **({"reserved_rate_bps": qc.reserved_rate_bps}
                       if qc.reserved_rate_bps else {}),
                }
                for qc in cfg.queue_map.configs
            ],
            "map": _map_entries_to_json(cfg.queue_map),
        },
        "flows": [
            {
                "teid": f.teid,
                "five_qi": f.five_qi,
                "inner_src_port": f.inner_src_port,
                "rate_bps": f.rate_bps,
                "frame_size_bytes": f.frame_size_bytes,
                "start_ms": f.start_ns / ms_to_ns(1),
                **({"stop_ms": f.stop_ns / ms_to_ns(1)}
                   if f.stop_ns is not None else {}),
                **({"jitter_fraction": f.jitter_fraction}
                   if f.jitter_fraction else {}),
            }
            for f in cfg.flows
        ],
        "duration_ms": cfg.duration_ns / ms_to_ns(1),
        "seed": cfg.seed,
        "mode": cfg.mode.value,
        "measurement_window_ms": cfg.measurement_window_ns / ms_to_ns(1),
    }


def _map_entries_to_json(queue_map: QueueMap) -> list[dict]:
    # Re-compress wildcard entries: if one tag maps every resource type to
    # the same queue, emit a single ANY row.
    rows = []
    by_tag: dict[ServiceTag, dict[ResourceType, int]] = {}
    for (tag, rtype), qid in queue_map._binding.items():
        by_tag.setdefault(tag, {})[rtype] = qid
    for tag in ServiceTag:
        binding = by_tag.get(tag)
        if not binding:
            continue
        qids = set(binding.values())
        if len(binding) == len(ResourceType) and len(qids) == 1:
            rows.append({"service_tag": tag.name, "resource_type": "ANY",
                         "queue_id": qids.pop()})
        else:
            for rtype in ResourceType:
                if rtype in binding:
                    rows.append({"service_tag": tag.name,
                                 "resource_type": rtype.name,
                                 "queue_id": binding[rtype]})
    return rows


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return from_json(doc)


def dump_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
