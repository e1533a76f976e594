"""Domain types shared by the whole pipeline.

Everything here is a plain value object: resource types, QoS profiles
(5QI rows), meter colors, service tags, the per-packet record, and the
output link description.  Behaviour is limited to construction and
validation; the processing stages live in their own modules.
"""

from dataclasses import dataclass
from enum import Enum

from .units import ms_to_ns

# Outer Ethernet + IPv4 + UDP + GTP-U + inner IPv4 + UDP, no VLAN, no payload.
MIN_ENCAP_FRAME_BYTES = 78


class InvalidProfile(ValueError):
    """A QosProfile violates one of its invariants."""


class ResourceType(Enum):
    """The four resource classes a 5QI can map to.

    ``GBR_DC`` and ``NON_GBR_DC`` are the delay-critical variants,
    conventionally written GBR* and Non-GBR*.
    """

    GBR = "GBR"
    GBR_DC = "GBR_DC"
    NON_GBR = "NON_GBR"
    NON_GBR_DC = "NON_GBR_DC"

    @property
    def delay_critical(self) -> bool:
        return self in (ResourceType.GBR_DC, ResourceType.NON_GBR_DC)

    @property
    def has_guarantee(self) -> bool:
        """True for every class that carries a committed bit rate."""
        return self is not ResourceType.NON_GBR

    @classmethod
    def from_text(cls, text: str) -> "ResourceType":
        """Parse a canonical name or the starred shorthand (``GBR*``)."""
        aliases = {
            "GBR*": cls.GBR_DC,
            "NON-GBR": cls.NON_GBR,
            "NON-GBR*": cls.NON_GBR_DC,
            "NON_GBR*": cls.NON_GBR_DC,
        }
        key = text.strip().upper()
        if key in aliases:
            return aliases[key]
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown resource type: {text!r}") from None


class Color(Enum):
    """Three-color marking result of the two-rate meter."""

    GREEN = "GREEN"
    YELLOW = "YELLOW"
    RED = "RED"


class ServiceTag(Enum):
    """Pipeline-internal label that drives egress queue selection."""

    DEDICATED = "DEDICATED"
    DELAY_CRITICAL = "DELAY_CRITICAL"
    PRIORITIZED = "PRIORITIZED"
    SHARED = "SHARED"


@dataclass(frozen=True)
class QosProfile:
    """One 5QI row: resource class, priority and delay/rate parameters.

    Durations are nanoseconds, rates bits per second, volumes bytes.
    ``priority_level`` follows the 3GPP convention: lower value means
    more important.  ``gfbr_bps``/``mfbr_bps`` may only be present for
    resource types that carry a guarantee; ``mdbv_bytes`` is mandatory
    for delay-critical profiles.
    """

    five_qi: int
    resource_type: ResourceType
    priority_level: int
    pdb_ns: int
    cn_pdb_ns: int
    per: float
    gfbr_bps: int | None = None
    mfbr_bps: int | None = None
    averaging_window_ns: int | None = None
    mdbv_bytes: int | None = None


def validate_profile(profile: QosProfile) -> QosProfile:
    """Return ``profile`` unchanged if every invariant holds.

    Raises:
        InvalidProfile: naming the violated invariant.
    """
    if not 0 <= profile.five_qi <= 255:
        raise InvalidProfile(f"five_qi {profile.five_qi} outside uint8 range")
    if not 0 <= profile.priority_level <= 255:
        raise InvalidProfile(
            f"priority_level {profile.priority_level} outside uint8 range"
        )
    if profile.pdb_ns <= 0 or profile.cn_pdb_ns <= 0:
        raise InvalidProfile("pdb and cn_pdb must be positive")
    if profile.cn_pdb_ns > profile.pdb_ns:
        raise InvalidProfile(
            f"cn_pdb ({profile.cn_pdb_ns} ns) exceeds pdb ({profile.pdb_ns} ns)"
        )
    if not 0.0 <= profile.per <= 1.0:
        raise InvalidProfile(f"per {profile.per} outside [0, 1]")
    if profile.resource_type is ResourceType.NON_GBR:
        if profile.gfbr_bps is not None or profile.mfbr_bps is not None:
            raise InvalidProfile("Non-GBR profiles carry no gfbr/mfbr")
    if profile.gfbr_bps is not None:
        if profile.mfbr_bps is None:
            raise InvalidProfile("gfbr present without mfbr")
        if profile.gfbr_bps > profile.mfbr_bps:
            raise InvalidProfile(
                f"gfbr ({profile.gfbr_bps}) exceeds mfbr ({profile.mfbr_bps})"
            )
    if profile.resource_type.delay_critical and profile.mdbv_bytes is None:
        raise InvalidProfile("delay-critical profiles must carry mdbv")
    if profile.mdbv_bytes is not None and profile.mdbv_bytes <= 0:
        raise InvalidProfile("mdbv must be positive when present")
    return profile


def _std(five_qi, rtype, prio, pdb_ms, cn_pdb_ms, per, mdbv=None):
    return QosProfile(
        five_qi=five_qi,
        resource_type=rtype,
        priority_level=prio,
        pdb_ns=ms_to_ns(pdb_ms),
        cn_pdb_ns=ms_to_ns(cn_pdb_ms),
        per=per,
        mdbv_bytes=mdbv,
    )


# Standardized 5QI examples (3GPP defaults).  MDBV is not standardized in
# this excerpt; 1354 bytes is the common TS 23.501 default for the
# delay-critical rows.  5QI 80 is listed as Non-GBR here even though the
# delay-critical Non-GBR class exists precisely for services like it; the
# scenario builders reclassify it explicitly when they want that behavior.
STANDARD_PROFILES: dict[int, QosProfile] = {
    p.five_qi: p
    for p in (
        _std(2, ResourceType.GBR, 40, 150, 20, 1e-3),
        _std(4, ResourceType.GBR, 50, 300, 20, 1e-3),
        _std(65, ResourceType.GBR, 7, 75, 10, 1e-2),
        _std(67, ResourceType.GBR, 15, 100, 20, 1e-3),
        _std(7, ResourceType.NON_GBR, 70, 100, 20, 1e-3),
        _std(69, ResourceType.NON_GBR, 5, 60, 10, 1e-6),
        _std(80, ResourceType.NON_GBR, 68, 10, 2, 1e-6),
        _std(84, ResourceType.GBR_DC, 24, 30, 5, 1e-5, mdbv=1354),
        _std(86, ResourceType.GBR_DC, 18, 5, 2, 1e-4, mdbv=1354),
        _std(89, ResourceType.GBR_DC, 25, 15, 1, 1e-4, mdbv=1354),
    )
}


class PacketRecord:
    """One simulated packet plus the pipeline's temporary metadata.

    The metadata fields (``five_qi`` through ``ingress_ts_ns``) start
    unset and are written by the classification/metering/tagging stages
    as the packet moves through the pipeline; ``departure_time_ns`` is
    set when the link finishes serializing the packet.  Plain slotted
    class rather than a dataclass: millions of these are created per run.
    """

    __slots__ = (
        "pkt_id",
        "flow_id",
        "size_bytes",
        "arrival_time_ns",
        "five_qi",
        "resource_type",
        "priority_level",
        "color",
        "service_tag",
        "queue_id",
        "ingress_ts_ns",
        "departure_time_ns",
    )

    def __init__(self, pkt_id: int, flow_id: int, size_bytes: int,
                 arrival_time_ns: int):
        self.pkt_id = pkt_id
        self.flow_id = flow_id
        self.size_bytes = size_bytes
        self.arrival_time_ns = arrival_time_ns
        self.five_qi = None
        self.resource_type = None
        self.priority_level = None
        self.color = None
        self.service_tag = None
        self.queue_id = None
        self.ingress_ts_ns = None
        self.departure_time_ns = None

    def __repr__(self):
        return (f"PacketRecord(pkt_id={self.pkt_id}, flow_id={self.flow_id}, "
                f"size={self.size_bytes}, t={self.arrival_time_ns})")


@dataclass(frozen=True)
class LinkConfig:
    """The single output link every queue drains into."""

    capacity_bps: int

    def __post_init__(self):
        if self.capacity_bps <= 0:
            raise ValueError("link capacity must be positive")
