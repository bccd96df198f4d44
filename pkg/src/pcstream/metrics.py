"""Per-run metric computation, CSV schemas and report aggregation.

Raw CSV carries exactly one row per run; seeds are only ever averaged
in the aggregate (report) file.  Both files open with a schema comment
row so downstream readers can refuse data they do not understand.  All
numeric cells use fixed formatting, which together with the
deterministic simulator makes repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field

from .scenario import RunResult

SCHEMA_VERSION = "pcstream.metrics.v1"
SCHEMA_COMMENT = f"# schema={SCHEMA_VERSION}"

RAW_FIELDS = [
    "scenario_id",
    "protocol",
    "topology",
    "bandwidth_mbps",
    "loss_pct",
    "seed",
    "status",
    "cache_hit_rate",
    "mean_gof_delay_ms",
    "p95_gof_delay_ms",
    "effective_throughput_mbps",
    "incomplete_gof_fraction",
    "packets_by_segment",
    "retransmissions",
    "gofs_counted",
    "gofs_incomplete",
    "unique_payload_bytes",
    "packets_delivered",
    "duplicates",
    "cs_lookup_hit_rate",
    "consumer_cs_hits",
    "cache_by_node",
    "link_packets_sent",
    "link_packets_lost",
    "link_packets_overflow",
]

# metrics carried into the aggregate file as mean/std pairs
AGG_METRICS = [
    "cache_hit_rate",
    "mean_gof_delay_ms",
    "p95_gof_delay_ms",
    "effective_throughput_mbps",
    "incomplete_gof_fraction",
    "retransmissions",
]

AGG_GROUP = ["protocol", "topology", "bandwidth_mbps", "loss_pct"]


class MetricsError(RuntimeError):
    """Raised for malformed metric files."""


@dataclass
class RunMetrics:
    scenario_id: str
    protocol: str
    topology: str
    bandwidth_mbps: float
    loss_pct: float
    seed: int
    status: str = "ok"
    cache_hit_rate: float = 0.0
    mean_gof_delay_ms: float | None = None
    p95_gof_delay_ms: float | None = None
    effective_throughput_mbps: float = 0.0
    incomplete_gof_fraction: float = 0.0
    packets_by_segment: dict[str, int] = field(default_factory=dict)
    retransmissions: int = 0
    gofs_counted: int = 0
    gofs_incomplete: int = 0
    unique_payload_bytes: int = 0
    packets_delivered: int = 0
    duplicates: int = 0
    cs_lookup_hit_rate: float | None = None
    consumer_cs_hits: int | None = None
    cache_by_node: dict[str, list[int]] = field(default_factory=dict)
    link_packets_sent: int = 0
    link_packets_lost: int = 0
    link_packets_overflow: int = 0


def nearest_rank(sorted_values: list, q: float):
    """Nearest-rank percentile on an ascending list."""
    if not sorted_values:
        return None
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


def compute_metrics(result: RunResult) -> RunMetrics:
    """Fold one run's raw objects into the flat metric row.

    GoFs first requested during the warm-up window are excluded from
    delay, throughput and completeness; cache and link counters keep
    the whole run, warm-up included.
    """
    cfg = result.config
    warmup = cfg.warmup_ns()

    counted = [
        r
        for c in result.consumers
        for r in c.records
        if r.first_send is not None and r.first_send >= warmup
    ]
    delays = sorted(
        r.completed_at - r.first_send for r in counted if r.completed_at is not None
    )
    incomplete = sum(1 for r in counted if r.completed_at is None)
    unique_bytes = sum(r.payload_bytes for r in counted)

    ends = [c.done_at for c in result.consumers if c.done_at is not None]
    last_completion = [r.completed_at for r in counted if r.completed_at is not None]
    end = max(ends + last_completion, default=warmup + 1)
    span_ns = max(end - warmup, 1)
    throughput_mbps = unique_bytes * 8 * 1000.0 / span_ns

    packets_by_segment: dict[str, int] = {}
    packets_delivered = 0
    duplicates = 0
    retransmissions = 0
    for c in result.consumers:
        for label, n in c.packets_by_label.items():
            packets_by_segment[label] = packets_by_segment.get(label, 0) + n
    if cfg.protocol == "inds":
        deliveries = sum(c.counters.data_received for c in result.consumers)
        packets_delivered = deliveries
        duplicates = sum(c.counters.late_data for c in result.consumers)
        retransmissions = sum(c.counters.retransmissions for c in result.consumers)
        unique_served = result.producer.counters.unique_served
        cache_hit_rate = 1.0 - unique_served / deliveries if deliveries else 0.0
        cs_hits = sum(f.cs.counters.hits for f in result.forwarders.values())
        cs_misses = sum(f.cs.counters.misses for f in result.forwarders.values())
        lookups = cs_hits + cs_misses
        cs_lookup_hit_rate = cs_hits / lookups if lookups else None
        consumer_cs_hits = sum(s.counters.hits for s in result.local_stores)
        if not result.local_stores:
            consumer_cs_hits = None
        cache_by_node = {
            name: [f.cs.counters.hits, f.cs.counters.misses]
            for name, f in sorted(result.forwarders.items())
        }
    else:
        packets_delivered = sum(
            sum(c.packets_by_label.values()) for c in result.consumers)
        duplicates = sum(c.duplicates for c in result.consumers)
        retransmissions = result.baseline.retransmission_total()
        counters = result.baseline.cache_counters()
        requests = counters.hits + counters.misses
        cache_hit_rate = counters.hits / requests if requests else 0.0
        cs_lookup_hit_rate = None
        consumer_cs_hits = None
        cache_by_node = {
            name: [c.cache.counters.hits, c.cache.counters.misses]
            for name, c in sorted(result.baseline.caches.items())
        }

    sent = lost = overflow = 0
    for link in result.topo.links:
        for host in (link.a, link.b):
            st = link.stats(host)
            sent += st.sent
            lost += st.dropped_loss
            overflow += st.dropped_overflow

    return RunMetrics(
        scenario_id=cfg.resolved_id(),
        protocol=cfg.protocol,
        topology=cfg.resolved_topology(),
        bandwidth_mbps=cfg.bandwidth_mbps,
        loss_pct=cfg.loss_pct,
        seed=cfg.seed,
        status="ok",
        cache_hit_rate=cache_hit_rate,
        mean_gof_delay_ms=(sum(delays) / len(delays) / 1e6) if delays else None,
        p95_gof_delay_ms=(
            nearest_rank(delays, 0.95) / 1e6 if delays else None
        ),
        effective_throughput_mbps=throughput_mbps,
        incomplete_gof_fraction=incomplete / len(counted) if counted else 0.0,
        packets_by_segment=packets_by_segment,
        retransmissions=retransmissions,
        gofs_counted=len(counted),
        gofs_incomplete=incomplete,
        unique_payload_bytes=unique_bytes,
        packets_delivered=packets_delivered,
        duplicates=duplicates,
        cs_lookup_hit_rate=cs_lookup_hit_rate,
        consumer_cs_hits=consumer_cs_hits,
        cache_by_node=cache_by_node,
        link_packets_sent=sent,
        link_packets_lost=lost,
        link_packets_overflow=overflow,
    )


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def metrics_row(m: RunMetrics) -> dict[str, str]:
    return {name: _fmt(getattr(m, name)) for name in RAW_FIELDS}


def failure_row(cfg, error: BaseException) -> dict[str, str]:
    """Placeholder row for a run that raised instead of finishing."""
    row = {name: "" for name in RAW_FIELDS}
    row.update(
        scenario_id=cfg.resolved_id(),
        protocol=cfg.protocol,
        topology=cfg.resolved_topology(),
        bandwidth_mbps=_fmt(cfg.bandwidth_mbps),
        loss_pct=_fmt(cfg.loss_pct),
        seed=str(cfg.seed),
        status=f"error:{type(error).__name__}",
    )
    return row


def write_raw_csv(rows: list[dict[str, str]], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_COMMENT + "\n")
        writer = csv.DictWriter(fh, fieldnames=RAW_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path: str) -> tuple[str, list[dict[str, str]]]:
    """Read a schema-stamped CSV; returns (schema version, rows)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise MetricsError(f"{path}: missing schema comment row")
        version = first.split("=", 1)[1]
        rows = list(csv.DictReader(fh))
    return version, rows


# ---------------------------------------------------------------------------
# Aggregation (report stage)
# ---------------------------------------------------------------------------


def aggregate_fields() -> list[str]:
    out = list(AGG_GROUP) + ["n_runs", "n_failed"]
    for m in AGG_METRICS:
        out.append(f"{m}_mean")
        out.append(f"{m}_std")
    return out


def _group_sort_key(key: tuple[str, ...]):
    protocol, topology, bandwidth, loss = key
    return (protocol, topology, float(bandwidth), float(loss))


def aggregate_rows(rows: list[dict[str, str]]) -> list[dict[str, str]]:
    """Collapse raw rows to one row per grid point: mean and sample
    standard deviation over seeds, failures counted but excluded."""
    groups: dict[tuple[str, ...], list[dict[str, str]]] = {}
    for row in rows:
        key = tuple(row[g] for g in AGG_GROUP)
        groups.setdefault(key, []).append(row)

    out = []
    for key in sorted(groups, key=_group_sort_key):
        members = groups[key]
        ok = [r for r in members if r.get("status") == "ok"]
        agg: dict[str, str] = dict(zip(AGG_GROUP, key))
        agg["n_runs"] = str(len(members))
        agg["n_failed"] = str(len(members) - len(ok))
        for m in AGG_METRICS:
            values = [float(r[m]) for r in ok if r.get(m, "") != ""]
            if not values:
                agg[f"{m}_mean"] = ""
                agg[f"{m}_std"] = ""
                continue
            agg[f"{m}_mean"] = f"{statistics.fmean(values):.6f}"
            std = statistics.stdev(values) if len(values) > 1 else 0.0
            agg[f"{m}_std"] = f"{std:.6f}"
        out.append(agg)
    return out


def write_aggregate_csv(rows: list[dict[str, str]], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_COMMENT + "\n")
        writer = csv.DictWriter(fh, fieldnames=aggregate_fields())
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Packet trace
# ---------------------------------------------------------------------------

TRACE_FIELDS = ["time_ns", "node", "link", "dir", "type", "name", "bytes", "outcome"]


def _packet_label(packet) -> str:
    name = getattr(packet, "name", None)
    if name is not None:
        return name.text
    obj = getattr(packet, "object", None)
    if obj is not None:
        return obj
    seq = getattr(packet, "seq", None)
    flow = getattr(packet, "flow", None)
    if seq is not None:
        return f"flow{flow}#{seq}"
    if flow is not None:
        return f"flow{flow}"
    return ""


class TraceWriter:
    """world.tracer sink streaming one CSV row per link event."""

    def __init__(self, path: str):
        self._fh = open(path, "w", newline="")
        self._fh.write(SCHEMA_COMMENT + "\n")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(TRACE_FIELDS)

    def __call__(self, time_ns, node, link, direction, packet, outcome) -> None:
        self._writer.writerow([
            time_ns, node, link, direction,
            type(packet).__name__, _packet_label(packet),
            packet.wire_size(), outcome,
        ])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
