"""qosplane: a QoS-aware 5G transport data-plane simulator.

The pipeline mirrors a programmable switch: parse GTP-U user-plane
frames, classify them to 5QI profiles by inner UDP source port, police
every guaranteed flow with its own two-rate three-color meter (one
shared meter per Non-GBR class), convert meter verdicts into service
tags, and drain tagged packets through strict-priority/DWRR egress
queues onto a single link.  A closed-form model predicts admissibility
and worst-case delays; preset scenarios reproduce the reference
experiments at desk scale.
"""

from .analytics import (AdmissionResult, AnalyticInputs, AnalyticOutputs,
                        ArrivalCaps, DelayBounds, GuaranteedFlow, NotAdmitted,
                        ServiceRates, admission_check, analyze, arrival_rates,
                        delay_bounds, service_rates)
from .classify import (Classification, MissingProfile, PortRange,
                       PortRangeMap, ProfileTable, classify)
from .config import (ConfigError, Mode, ScenarioConfig, dump_scenario,
                     from_json, load_scenario, to_json)
from .core import (Color, InvalidProfile, LinkConfig, PacketRecord,
                   QosProfile, ResourceType, ServiceTag, STANDARD_PROFILES,
                   validate_profile)
from .engine import (Alert, FlowStats, QueueReport, RunMetrics,
                     WindowSnapshot, pdb_account, run, scenario_analytics)
from .exports import write_outputs
from .metering import (CapacityExceeded, CapacityLimits, Conformance,
                       MeterMatrix, MeterParams, MeterState, aggregate_mark,
                       trtcm_mark)
from .presets import UnknownPreset, build as build_preset, list_presets
from .scheduler import (EgressScheduler, MapEntry, QueueConfig, QueueMap,
                        UnmappedCombination, default_queue_map)
from .tagging import PolicyConfig, tag
from .traffic import FlowSpec, emit
from .wire import (FrameSpec, FrameTooShort, NotGtpu, ParsedHeaders,
                   Truncated, UnsupportedVersion, WireError, build_frame,
                   frame_of_size, parse_frame)

__version__ = "0.1.0"
