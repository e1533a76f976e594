"""Metrics export: flows.csv, queues.csv and summary.json.

Formatting is pinned (column order, float precision, sorted JSON keys)
so that two runs of the same scenario and seed produce byte-identical
files.  The wall-clock runtime therefore stays out of summary.json; it
is available on the in-memory RunMetrics object.
"""

import csv
import json
from pathlib import Path

from .engine import RunMetrics
from .units import NS_PER_S

FLOWS_COLUMNS = ["flow_id", "five_qi", "resource_type", "sent_pkts",
                 "sent_bytes", "meter_drops", "queue_drops",
                 "delivered_bytes", "throughput_bps", "loss_rate", "pdb_lost"]

QUEUES_COLUMNS = ["queue_id", "tier", "enqueued", "tail_dropped",
                  "max_delay_ns", "p50_delay_ns", "p99_delay_ns"]


def flow_rows(metrics: RunMetrics) -> list[dict]:
    duration_s = metrics.duration_ns / NS_PER_S
    rows = []
    for flow_id, st in sorted(metrics.flows.items()):
        throughput = st.delivered_bytes * 8 / duration_s
        rows.append({
            "flow_id": flow_id,
            "five_qi": st.five_qi,
            "resource_type": st.resource_type.name,
            "sent_pkts": st.sent_pkts,
            "sent_bytes": st.sent_bytes,
            "meter_drops": st.meter_drops,
            "queue_drops": st.queue_drops,
            "delivered_bytes": st.delivered_bytes,
            "throughput_bps": f"{throughput:.3f}",
            "loss_rate": f"{st.loss_rate():.6f}",
            "pdb_lost": st.pdb_lost,
        })
    return rows


def queue_rows(metrics: RunMetrics) -> list[dict]:
    return [{
        "queue_id": q.queue_id,
        "tier": q.tier,
        "enqueued": q.enqueued,
        "tail_dropped": q.tail_dropped,
        "max_delay_ns": q.max_delay_ns,
        "p50_delay_ns": q.p50_delay_ns,
        "p99_delay_ns": q.p99_delay_ns,
    } for q in metrics.queues]


def analytics_document(a) -> dict:
    """JSON shape of AnalyticOutputs, shared by summary.json and the CLI."""
    doc = {
        "admission": {
            "admitted": a.admission.admitted,
            "total_cir_bps": a.admission.total_cir_bps,
            "excess_bps": a.admission.excess_bps,
        },
        "arrival_caps": {
            "prioritized_bps": a.arrivals.prioritized_bps,
            "shared_bps": a.arrivals.shared_bps,
        },
    }
    if a.rates is not None:
        doc["service_rates"] = {
            "guaranteed_bps": a.rates.guaranteed_bps,
            "residual_bps": a.rates.residual_bps,
            "prioritized_bps": a.rates.prioritized_bps,
            "shared_bps": a.rates.shared_bps,
        }
    if a.delays is not None:
        doc["delay_bounds_ns"] = {
            "top": a.delays.top_ns,
            "dedicated": a.delays.dedicated_ns,
            "prioritized": a.delays.prioritized_ns,
            "shared": a.delays.shared_ns,
        }
    return doc


def summary_document(metrics: RunMetrics) -> dict:
    analytics = analytics_document(metrics.analytics)
    totals = metrics.totals()
    return {
        "scenario": {
            "name": metrics.scenario_name,
            "mode": metrics.mode.value,
            "seed": metrics.seed,
            "duration_ms": metrics.duration_ns / 1e6,
            "capacity_bps": metrics.capacity_bps,
            "offered_bps": metrics.offered_bps,
            "offered_capacity_ratio": round(
                metrics.offered_bps / metrics.capacity_bps, 4),
        },
        "analytics": analytics,
        "totals": totals,
        "alerts": [
            {"window": al.window, "time_ns": al.time_ns, "kind": al.kind,
             "subject": al.subject, "value": al.value, "bound": al.bound}
            for al in metrics.alerts
        ],
        "reconfiguration_requests": metrics.reconfig_requests,
        "sim_end_ns": metrics.sim_end_ns,
    }


def write_outputs(metrics: RunMetrics, out_dir: str | Path,
                  fmt: str = "csv") -> list[Path]:
    """Write flows/queues/summary into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        flows_path = out / "flows.csv"
        with open(flows_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=FLOWS_COLUMNS)
            writer.writeheader()
            writer.writerows(flow_rows(metrics))
        queues_path = out / "queues.csv"
        with open(queues_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=QUEUES_COLUMNS)
            writer.writeheader()
            writer.writerows(queue_rows(metrics))
    elif fmt == "json":
        flows_path = out / "flows.json"
        flows_path.write_text(
            json.dumps(flow_rows(metrics), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        queues_path = out / "queues.json"
        queues_path.write_text(
            json.dumps(queue_rows(metrics), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    written.extend([flows_path, queues_path])
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(summary_document(metrics), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    written.append(summary_path)
    return written
