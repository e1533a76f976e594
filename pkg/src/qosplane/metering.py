"""Token-bucket marking.

Flows of every resource type except Non-GBR get a private two-rate
three-color marker (RFC 2698, color-blind mode), organized as one meter
array per 5QI with a flow-id index — mirroring how meter arrays are
sized on switch ASICs, including their capacity limits.  Each Non-GBR
5QI instead shares a single two-color meter that polices the aggregate.

Token state is kept in rate-time units (bits-per-second times
nanoseconds) so refills are exact integer arithmetic: no tokens are ever
lost to rounding, and results are bit-reproducible.
"""

from dataclasses import dataclass
from enum import Enum

from .core import Color
from .units import NS_PER_S

# One byte of tokens, in rate-time units.
_BYTE = 8 * NS_PER_S


class Conformance(Enum):
    """Two-color result of an aggregate meter."""

    CONFORM = "CONFORM"
    EXCEED = "EXCEED"


class CapacityExceeded(RuntimeError):
    """No meter slot left for a new flow."""


@dataclass(frozen=True)
class MeterParams:
    """Committed/peak rates (bits/s) and burst sizes (bytes)."""

    cir_bps: int
    pir_bps: int
    cbs_bytes: int
    pbs_bytes: int

    def __post_init__(self):
        if self.cir_bps < 0 or self.pir_bps <= 0:
            raise ValueError("need cir >= 0 and pir > 0")
        if self.cir_bps > self.pir_bps:
            raise ValueError(f"cir {self.cir_bps} exceeds pir {self.pir_bps}")
        if not 0 < self.cbs_bytes <= self.pbs_bytes:
            raise ValueError("need 0 < cbs <= pbs")

    @classmethod
    def single_rate(cls, pir_bps: int, pbs_bytes: int) -> "MeterParams":
        """Parameters for an aggregate meter: one rate, one bucket."""
        return cls(cir_bps=pir_bps, pir_bps=pir_bps,
                   cbs_bytes=pbs_bytes, pbs_bytes=pbs_bytes)


class MeterState:
    """Two token buckets with a last-update timestamp.

    ``tc``/``tp`` hold the committed and peak tokens in rate-time units;
    both buckets start full so an initial burst up to the configured
    burst size passes unmarked.
    """

    __slots__ = ("params", "tc", "tp", "last_update_ns",
                 "_cap_c", "_cap_p", "_cir", "_pir")

    def __init__(self, params: MeterParams, now_ns: int = 0):
        self.params = params
        self._cap_c = params.cbs_bytes * _BYTE
        self._cap_p = params.pbs_bytes * _BYTE
        self._cir = params.cir_bps
        self._pir = params.pir_bps
        self.tc = self._cap_c
        self.tp = self._cap_p
        self.last_update_ns = now_ns

    def committed_bytes(self) -> float:
        return self.tc / _BYTE

    def peak_bytes(self) -> float:
        return self.tp / _BYTE


def trtcm_mark(state: MeterState, now_ns: int, size_bytes: int) -> Color:
    """Refill both buckets for the elapsed time, then mark color-blind.

    RED if the peak bucket cannot cover the packet; YELLOW consumes the
    peak bucket only; GREEN consumes both (RFC 2698 behavior).  Total
    function: requires only ``now_ns >= state.last_update_ns``.
    """
    elapsed = now_ns - state.last_update_ns
    if elapsed:
        tc = state.tc + state._cir * elapsed
        state.tc = tc if tc < state._cap_c else state._cap_c
        tp = state.tp + state._pir * elapsed
        state.tp = tp if tp < state._cap_p else state._cap_p
        state.last_update_ns = now_ns
    need = size_bytes * _BYTE
    if state.tp < need:
        return Color.RED
    if state.tc < need:
        state.tp -= need
        return Color.YELLOW
    state.tc -= need
    state.tp -= need
    return Color.GREEN


def aggregate_mark(state: MeterState, now_ns: int, size_bytes: int) -> Conformance:
    """Single-bucket two-color check at the peak rate.

    CONFORM decrements the bucket; EXCEED leaves it untouched.
    """
    elapsed = now_ns - state.last_update_ns
    if elapsed:
        tp = state.tp + state._pir * elapsed
        state.tp = tp if tp < state._cap_p else state._cap_p
        state.last_update_ns = now_ns
    need = size_bytes * _BYTE
    if state.tp < need:
        return Conformance.EXCEED
    state.tp -= need
    return Conformance.CONFORM


@dataclass(frozen=True)
class CapacityLimits:
    """Hardware-style limits on meter allocation (all configurable)."""

    per_array_max: int = 8192
    total_max: int = 24576
    max_arrays: int = 23


class MeterMatrix:
    """(5QI x flow) meter arrays plus one aggregate meter per Non-GBR 5QI.

    Per-flow meters are allocated lazily on the first packet of a flow,
    initialized with the 5QI's configured parameters and full buckets.
    The same (5QI, flow) pair always returns the same state object.
    """

    def __init__(self, per_flow_params: dict[int, MeterParams],
                 aggregate_params: dict[int, MeterParams],
                 limits: CapacityLimits = CapacityLimits(),
                 now_ns: int = 0):
        overlap = set(per_flow_params) & set(aggregate_params)
        if overlap:
            raise ValueError(f"5QIs configured both per-flow and aggregate: "
                             f"{sorted(overlap)}")
        if len(per_flow_params) > limits.max_arrays:
            raise CapacityExceeded(
                f"{len(per_flow_params)} meter arrays exceed the "
                f"{limits.max_arrays}-array limit"
            )
        self.limits = limits
        self._per_flow_params = dict(per_flow_params)
        self._arrays: dict[int, list[MeterState]] = {
            qi: [] for qi in per_flow_params
        }
        self._index: dict[int, dict[int, int]] = {qi: {} for qi in per_flow_params}
        self._total_allocated = 0
        self.aggregates: dict[int, MeterState] = {
            qi: MeterState(params, now_ns)
            for qi, params in aggregate_params.items()
        }

    def is_aggregate(self, five_qi: int) -> bool:
        return five_qi in self.aggregates

    def allocated(self) -> int:
        return self._total_allocated

    def meter_for(self, five_qi: int, flow_id: int,
                  now_ns: int = 0) -> MeterState:
        """Return (allocating if needed) the meter for this 5QI and flow."""
        agg = self.aggregates.get(five_qi)
        if agg is not None:
            return agg
        try:
            index = self._index[five_qi]
        except KeyError:
            raise KeyError(f"5QI {five_qi} has no meter configuration") from None
        slot = index.get(flow_id)
        array = self._arrays[five_qi]
        if slot is not None:
            return array[slot]
        if len(array) >= self.limits.per_array_max:
            raise CapacityExceeded(
                f"meter array for 5QI {five_qi} is full "
                f"({self.limits.per_array_max} entries)"
            )
        if self._total_allocated >= self.limits.total_max:
            raise CapacityExceeded(
                f"total meter capacity ({self.limits.total_max}) exhausted"
            )
        state = MeterState(self._per_flow_params[five_qi], now_ns)
        index[flow_id] = len(array)
        array.append(state)
        self._total_allocated += 1
        return state
