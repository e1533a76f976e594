"""Closed-form admission and worst-case rate/delay model.

With strict priority over a single link, the committed rates of all
guaranteed flows must fit the link for their guarantees to be meetable;
whatever is left over serves the prioritized and shared tiers.  These
functions compute that budget split, the worst-case arrival rates of the
two lower tiers, and buffer-drain delay bounds for all four levels.

All rates are exact integer bits/s; durations are nanoseconds rounded
half-up.  The two lower-tier delay figures are approximations (their
queues can be overloaded) and are reported as advisory values; they are
``None`` when the corresponding service rate is zero (the starvation
case for the lowest tier).
"""

from dataclasses import dataclass

from .units import NS_PER_S, div_round_half_up, round_half_up


class NotAdmitted(ValueError):
    """Committed rates exceed the link; service rates are undefined."""


@dataclass(frozen=True)
class GuaranteedFlow:
    """One flow of a guaranteed (non-Non-GBR) 5QI, for the analytic model."""

    five_qi: int
    cir_bps: int
    pir_bps: int
    prioritized: bool = False

    def __post_init__(self):
        if self.cir_bps < 0 or self.pir_bps < self.cir_bps:
            raise ValueError("need 0 <= cir <= pir")


@dataclass(frozen=True)
class AnalyticInputs:
    """Everything the model needs about a scenario.

    ``buffer_bits`` is the per-queue buffer bound used in the delay
    bounds (the same value for every level, matching the simplified
    one-queue-per-level model).
    """

    link_rate_bps: int
    guaranteed_flows: tuple[GuaranteedFlow, ...]
    nongbr_aggregate_pir_bps: int
    nongbr_prioritized_fraction: float
    buffer_bits: int

    def __post_init__(self):
        if self.link_rate_bps <= 0:
            raise ValueError("link rate must be positive")
        if not 0.0 <= self.nongbr_prioritized_fraction <= 1.0:
            raise ValueError("prioritized fraction outside [0, 1]")
        if self.nongbr_aggregate_pir_bps < 0 or self.buffer_bits <= 0:
            raise ValueError("need nonnegative aggregate pir, positive buffer")


@dataclass(frozen=True)
class AdmissionResult:
    admitted: bool
    total_cir_bps: int
    excess_bps: int


@dataclass(frozen=True)
class ServiceRates:
    """How the link capacity splits across the priority levels."""

    guaranteed_bps: int    # aggregate committed rate entering the top tiers
    residual_bps: int      # link capacity minus the guaranteed aggregate
    prioritized_bps: int   # share of the residual serving prioritized traffic
    shared_bps: int        # what remains for best-effort traffic


@dataclass(frozen=True)
class ArrivalCaps:
    """Worst-case arrival rates of the two lower priority levels."""

    prioritized_bps: int
    shared_bps: int


@dataclass(frozen=True)
class DelayBounds:
    """Worst-case buffer-drain delays per priority level (ns)."""

    top_ns: int
    dedicated_ns: int
    prioritized_ns: int | None
    shared_ns: int | None


@dataclass(frozen=True)
class AnalyticOutputs:
    admission: AdmissionResult
    rates: ServiceRates | None
    arrivals: ArrivalCaps
    delays: DelayBounds | None


def total_cir(inputs: AnalyticInputs) -> int:
    return sum(f.cir_bps for f in inputs.guaranteed_flows)


def admission_check(inputs: AnalyticInputs) -> AdmissionResult:
    """ADMIT iff the committed rates of all guaranteed flows fit the link."""
    cir_sum = total_cir(inputs)
    excess = cir_sum - inputs.link_rate_bps
    return AdmissionResult(
        admitted=excess <= 0,
        total_cir_bps=cir_sum,
        excess_bps=max(0, excess),
    )


def _prioritized_nongbr_bps(inputs: AnalyticInputs) -> int:
    return round_half_up(
        inputs.nongbr_aggregate_pir_bps * inputs.nongbr_prioritized_fraction
    )


def service_rates(inputs: AnalyticInputs) -> ServiceRates:
    """Split the link into guaranteed / prioritized / shared service rates.

    The prioritized tier gets the smaller of the residual capacity and
    its own worst-case demand; the shared tier gets the rest (possibly
    zero, i.e. starvation under persistent prioritized load).

    Raises:
        NotAdmitted: if the committed rates already exceed the link.
    """
    admission = admission_check(inputs)
    if not admission.admitted:
        raise NotAdmitted(
            f"committed rates exceed the link by {admission.excess_bps} bits/s"
        )
    guaranteed = admission.total_cir_bps
    residual = inputs.link_rate_bps - guaranteed
    demand = _prioritized_nongbr_bps(inputs) + sum(
        f.pir_bps - f.cir_bps for f in inputs.guaranteed_flows if f.prioritized
    )
    prioritized = min(residual, demand)
    return ServiceRates(
        guaranteed_bps=guaranteed,
        residual_bps=residual,
        prioritized_bps=prioritized,
        shared_bps=residual - prioritized,
    )


def arrival_rates(inputs: AnalyticInputs) -> ArrivalCaps:
    """Worst-case arrival rates for the prioritized and shared levels.

    Excess traffic of a guaranteed flow (anything between its committed
    and peak rate) lands in one of the two lower levels depending on the
    flow's prioritized flag; Non-GBR traffic splits by the configured
    fraction.  The two figures are exact complements: they always sum to
    the aggregate Non-GBR peak plus the total guaranteed excess.
    """
    prioritized_ng = _prioritized_nongbr_bps(inputs)
    shared_ng = inputs.nongbr_aggregate_pir_bps - prioritized_ng
    prioritized = prioritized_ng
    shared = shared_ng
    for f in inputs.guaranteed_flows:
        excess = f.pir_bps - f.cir_bps
        if f.prioritized:
            prioritized += excess
        else:
            shared += excess
    return ArrivalCaps(prioritized_bps=prioritized, shared_bps=shared)


def delay_bounds(buffer_bits: int, link_rate_bps: int,
                 prioritized_rate_bps: int,
                 shared_rate_bps: int) -> DelayBounds:
    """Buffer-drain delay bounds for the four priority levels.

    The top level drains a full buffer at the full link rate; the
    dedicated level may additionally wait for one full higher-level
    buffer.  The two lower levels drain at their service-rate share and
    are undefined (``None``) when that share is zero.
    """
    if link_rate_bps <= 0:
        raise ValueError("link rate must be positive")
    top = div_round_half_up(buffer_bits * NS_PER_S, link_rate_bps)
    dedicated = div_round_half_up(2 * buffer_bits * NS_PER_S, link_rate_bps)
    prioritized = (
        div_round_half_up(buffer_bits * NS_PER_S, prioritized_rate_bps)
        if prioritized_rate_bps > 0 else None
    )
    shared = (
        div_round_half_up(buffer_bits * NS_PER_S, shared_rate_bps)
        if shared_rate_bps > 0 else None
    )
    return DelayBounds(
        top_ns=top,
        dedicated_ns=dedicated,
        prioritized_ns=prioritized,
        shared_ns=shared,
    )


def analyze(inputs: AnalyticInputs) -> AnalyticOutputs:
    """Run the whole model; rate/delay figures are None when not admitted."""
    admission = admission_check(inputs)
    arrivals = arrival_rates(inputs)
    if not admission.admitted:
        return AnalyticOutputs(admission=admission, rates=None,
                               arrivals=arrivals, delays=None)
    rates = service_rates(inputs)
    delays = delay_bounds(
        inputs.buffer_bits, inputs.link_rate_bps,
        rates.prioritized_bps, rates.shared_bps,
    )
    return AnalyticOutputs(admission=admission, rates=rates,
                           arrivals=arrivals, delays=delays)
