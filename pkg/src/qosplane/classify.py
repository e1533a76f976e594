"""QoS profiling and flow identification.

The profiler maps the inner UDP source port to a 5QI through an ordered
table of disjoint port ranges; the flow identifier is simply the GTP-U
TEID, which the control plane manages as a collision-free space.
"""

import bisect
from dataclasses import dataclass

from .core import QosProfile, ResourceType, validate_profile
from .wire import ParsedHeaders


class InvalidPortMap(ValueError):
    """The port-range table violates its invariants."""


class MissingProfile(KeyError):
    """A 5QI referenced by the port map has no profile row."""


@dataclass(frozen=True)
class PortRange:
    lo: int
    hi: int
    five_qi: int


class PortRangeMap:
    """Ordered, pairwise-disjoint port ranges plus a default 5QI.

    Ports that match no range fall back to ``default_five_qi``, which
    must name a Non-GBR profile so that unmapped traffic can only ever
    receive best-effort treatment.
    """

    def __init__(self, ranges: list[PortRange], default_five_qi: int):
        ordered = sorted(ranges, key=lambda r: r.lo)
        for r in ordered:
            if not (0 <= r.lo <= r.hi <= 65535):
                raise InvalidPortMap(f"bad range [{r.lo}, {r.hi}]")
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.lo <= prev.hi:
                raise InvalidPortMap(
                    f"ranges [{prev.lo},{prev.hi}] and [{cur.lo},{cur.hi}] overlap"
                )
        self.ranges = tuple(ordered)
        self.default_five_qi = default_five_qi
        self._los = [r.lo for r in ordered]

    def lookup(self, port: int) -> int:
        """Return the matching range's 5QI, or the default."""
        i = bisect.bisect_right(self._los, port) - 1
        if i >= 0 and self.ranges[i].lo <= port <= self.ranges[i].hi:
            return self.ranges[i].five_qi
        return self.default_five_qi

    def referenced_five_qis(self) -> set[int]:
        return {r.five_qi for r in self.ranges} | {self.default_five_qi}


class ProfileTable:
    """All configured 5QI rows, validated at construction."""

    def __init__(self, profiles: list[QosProfile]):
        self._by_five_qi: dict[int, QosProfile] = {}
        for p in profiles:
            validate_profile(p)
            if p.five_qi in self._by_five_qi:
                raise InvalidPortMap(f"duplicate profile for 5QI {p.five_qi}")
            self._by_five_qi[p.five_qi] = p

    def __contains__(self, five_qi: int) -> bool:
        return five_qi in self._by_five_qi

    def __iter__(self):
        return iter(self._by_five_qi.values())

    def get(self, five_qi: int) -> QosProfile:
        try:
            return self._by_five_qi[five_qi]
        except KeyError:
            raise MissingProfile(f"no profile configured for 5QI {five_qi}") from None


def check_map_against_table(port_map: PortRangeMap, table: ProfileTable) -> None:
    """Enforce the cross-table invariants at load time."""
    for qi in sorted(port_map.referenced_five_qis()):
        if qi not in table:
            raise MissingProfile(f"port map references unknown 5QI {qi}")
    default = table.get(port_map.default_five_qi)
    if default.resource_type is not ResourceType.NON_GBR:
        raise InvalidPortMap(
            f"default 5QI {port_map.default_five_qi} must be Non-GBR, "
            f"got {default.resource_type.name}"
        )


@dataclass(frozen=True)
class Classification:
    five_qi: int
    profile: QosProfile
    flow_id: int


def classify(headers: ParsedHeaders, port_map: PortRangeMap,
             table: ProfileTable) -> Classification:
    """Resolve a parsed frame to (5QI, profile, flow id).

    Flow identity is exactly the GTP-U TEID; the inner UDP source port
    selects the 5QI.  Pure function of its inputs.
    """
    five_qi = port_map.lookup(headers.inner_udp.src_port)
    return Classification(
        five_qi=five_qi,
        profile=table.get(five_qi),
        flow_id=headers.gtpu.teid,
    )
