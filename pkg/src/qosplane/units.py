"""Canonical units used throughout the simulator.

Time is an integer count of nanoseconds from simulation start; rates are
integer bits per second; volumes are integer bytes.  Conversions from the
mixed units found in configs (kbps, Mbps, milliseconds, ...) happen here,
once, so the rest of the code never multiplies by the wrong power of ten.
"""

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_US = 1_000

KBPS = 1_000
MBPS = 1_000_000
GBPS = 1_000_000_000


def kbps(value: float) -> int:
    return int(value * KBPS)


def mbps(value: float) -> int:
    return int(value * MBPS)


def gbps(value: float) -> int:
    return int(value * GBPS)


def ms_to_ns(value: float) -> int:
    return int(value * NS_PER_MS)


def us_to_ns(value: float) -> int:
    return int(value * NS_PER_US)


def div_round_half_up(num: int, den: int) -> int:
    """Integer division rounding halves away from zero (num, den >= 0)."""
    return (num + den // 2) // den


def round_half_up(value: float) -> int:
    """Round a nonnegative float with .5 going up (unlike banker's round)."""
    return int(value + 0.5)
