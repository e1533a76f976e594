"""Service tagging: meter verdict + profile -> queue-selection label.

Red/exceeding packets are dropped here.  Green packets of guaranteed
classes keep their dedicated or delay-critical treatment regardless of
the prioritization threshold; everything that exceeded its committed
rate (and conforming Non-GBR traffic) is split into Prioritized or
Shared by comparing the profile's priority level against a configurable
threshold.
"""

from dataclasses import dataclass

from .core import Color, QosProfile, ResourceType, ServiceTag
from .metering import Conformance


@dataclass(frozen=True)
class PolicyConfig:
    """Prioritization threshold plus the analytic Non-GBR split fraction.

    3GPP priority values decrease with importance, so by default a flow
    is prioritized when ``priority_level <= priority_threshold``; set
    ``low_value_is_important=False`` to flip the comparator.
    ``nongbr_prioritized_fraction`` is the share of Non-GBR capacity
    assumed to be prioritized; it feeds the analytic model only.
    """

    priority_threshold: int
    nongbr_prioritized_fraction: float = 0.0
    low_value_is_important: bool = True

    def __post_init__(self):
        if not 0.0 <= self.nongbr_prioritized_fraction <= 1.0:
            raise ValueError("nongbr_prioritized_fraction outside [0, 1]")

    def is_prioritized(self, profile: QosProfile) -> bool:
        if self.low_value_is_important:
            return profile.priority_level <= self.priority_threshold
        return profile.priority_level >= self.priority_threshold


def tag(mark: Color | Conformance, profile: QosProfile,
        cfg: PolicyConfig) -> ServiceTag | None:
    """Map a meter verdict to a service tag; ``None`` means drop.

    Exhaustive over the (verdict, resource type) cross product.  A GREEN
    Non-GBR packet cannot occur in the standard pipeline (Non-GBR 5QIs
    are metered two-color); it maps to SHARED so that green handling
    never depends on the threshold.
    """
    if mark is Color.RED or mark is Conformance.EXCEED:
        return None
    if mark is Color.GREEN:
        rtype = profile.resource_type
        if rtype.delay_critical:
            return ServiceTag.DELAY_CRITICAL
        if rtype is ResourceType.GBR:
            return ServiceTag.DEDICATED
        return ServiceTag.SHARED
    # YELLOW or CONFORM: competes for shared capacity.
    if cfg.is_prioritized(profile):
        return ServiceTag.PRIORITIZED
    return ServiceTag.SHARED
