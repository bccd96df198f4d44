"""Producer and consumer endpoints.

The producer is a store of precomputed Data packets: each group of
frames (GoF) publishes a top-layer object plus the four tier segments,
all chunked at the payload MTU, and a catalog object describing the
per-GoF byte sizes that consumers use to plan requests.

The consumer streams GoFs sequentially with a fixed interest window.
Its bandwidth estimate is an EWMA over 100 ms bins of received bytes,
and the estimate picks the quality rung whose cumulative byte
requirement fits the per-GoF budget.  Lost chunks are retransmitted
with fresh nonces after an adaptive timeout; a chunk is abandoned after
a retry limit and its GoF counted incomplete.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

from .codec import VoxelCloud, build_octree, top_layer_bytes
from .forwarding import ContentStore
from .layering import TIER_BOUNDS, split_segments
from .naming import (
    LAST_LAYER,
    METADATA,
    SEGMENT_LABELS,
    TOP_LAYER,
    Name,
    metadata_name,
    segment_name,
    top_layer_name,
)
from .netsim import MS, SEC, Host, SimWorld
from .wire import MTU_PAYLOAD, DataPacket, Interest, chunk_names, make_data_packets

GOF_DURATION_NS = 1 * SEC  # 30 frames at 30 fps
DEFAULT_WINDOW = 64
MAX_RETRIES = 5
TIMEOUT_SCAN_NS = 50 * MS
MIN_TIMEOUT_NS = 100 * MS
RTT_ALPHA = 0.125
EST_BIN_NS = 100 * MS
EST_ALPHA = 0.3
BUDGET_FRACTION = 0.8


class EndpointError(RuntimeError):
    """Raised for inconsistent endpoint configuration."""


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GofSizes:
    top: int
    segments: dict[str, int]


@dataclass(frozen=True)
class Catalog:
    """Byte-size manifest of one published time window."""

    dataset: str
    window: str
    depth: int
    gof_duration_ns: int
    gofs: dict[int, GofSizes]

    def to_json(self) -> bytes:
        doc = {
            "dataset": self.dataset,
            "window": self.window,
            "depth": self.depth,
            "gof_duration_ns": self.gof_duration_ns,
            "gofs": {
                str(g): {"top": s.top, "segments": s.segments}
                for g, s in sorted(self.gofs.items())
            },
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()

    @classmethod
    def from_json(cls, buf: bytes) -> "Catalog":
        try:
            doc = json.loads(buf)
            gofs = {
                int(g): GofSizes(top=int(v["top"]), segments=dict(v["segments"]))
                for g, v in doc["gofs"].items()
            }
            return cls(
                dataset=doc["dataset"],
                window=doc["window"],
                depth=int(doc["depth"]),
                gof_duration_ns=int(doc["gof_duration_ns"]),
                gofs=gofs,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EndpointError(f"malformed catalog: {exc}") from exc

    def requirement(self, gof: int, rung: int) -> int:
        """Bytes needed for the top layer plus tier rungs 0..rung."""
        sizes = self.gofs[gof]
        return sizes.top + sum(sizes.segments[s] for s in SEGMENT_LABELS[: rung + 1])


# ---------------------------------------------------------------------------
# Content encoding
# ---------------------------------------------------------------------------


def encode_gof_content(
    clouds: list[VoxelCloud],
    gof_size: int,
    ratios: tuple[float, ...] = TIER_BOUNDS,
) -> list[dict[str, bytes]]:
    """Encode a frame sequence into per-GoF named payloads.

    Each GoF concatenates its frames' parts with a u32 length prefix per
    frame so the stream stays decodable frame by frame.  Keys: TOP_LAYER
    plus the four tier labels.
    """
    if not clouds:
        raise EndpointError("empty frame sequence")
    if gof_size < 1:
        raise EndpointError(f"gof_size must be positive: {gof_size}")
    out: list[dict[str, bytes]] = []
    for start in range(0, len(clouds), gof_size):
        group = clouds[start:start + gof_size]
        parts: dict[str, list[bytes]] = {TOP_LAYER: []}
        for label in SEGMENT_LABELS:
            parts[label] = []
        for vc in group:
            frame = build_octree(vc)
            top = top_layer_bytes(frame)
            parts[TOP_LAYER].append(struct.pack("<I", len(top)) + top)
            for label, payload in split_segments(vc, ratios).items():
                parts[label].append(struct.pack("<I", len(payload)) + payload)
        out.append({k: b"".join(v) for k, v in parts.items()})
    return out


def build_catalog(
    dataset: str,
    window: str,
    depth: int,
    contents: list[dict[str, bytes]],
    gof_duration_ns: int = GOF_DURATION_NS,
) -> Catalog:
    gofs = {
        g + 1: GofSizes(
            top=len(content[TOP_LAYER]),
            segments={s: len(content[s]) for s in SEGMENT_LABELS},
        )
        for g, content in enumerate(contents)
    }
    return Catalog(
        dataset=dataset, window=window, depth=depth,
        gof_duration_ns=gof_duration_ns, gofs=gofs,
    )


# ---------------------------------------------------------------------------
# Producer
# ---------------------------------------------------------------------------


@dataclass
class ProducerCounters:
    served: int = 0
    unique_served: int = 0
    not_found: int = 0


class ProducerStore:
    """All Data packets of one published window, keyed by name components."""

    def __init__(self, catalog: Catalog, packets: dict[tuple[str, ...], DataPacket]):
        self.catalog = catalog
        self.packets = packets

    @classmethod
    def build(
        cls,
        dataset: str,
        window: str,
        clouds: list[VoxelCloud],
        gof_size: int = 30,
        gof_duration_ns: int = GOF_DURATION_NS,
        mtu: int = MTU_PAYLOAD,
        ratios: tuple[float, ...] = TIER_BOUNDS,
    ) -> "ProducerStore":
        depth = clouds[0].depth
        contents = encode_gof_content(clouds, gof_size, ratios)
        catalog = build_catalog(dataset, window, depth, contents, gof_duration_ns)
        packets: dict[tuple[str, ...], DataPacket] = {}

        def _publish(base: Name, size: int) -> None:
            for pkt in make_data_packets(base, size, mtu):
                packets[pkt.name.components] = pkt

        for g, content in enumerate(contents, start=1):
            _publish(top_layer_name(dataset, window, g), len(content[TOP_LAYER]))
            for label in SEGMENT_LABELS:
                _publish(segment_name(dataset, window, g, label), len(content[label]))
        _publish(metadata_name(dataset), len(catalog.to_json()))
        return cls(catalog, packets)

    @classmethod
    def from_catalog(cls, catalog: Catalog, mtu: int = MTU_PAYLOAD) -> "ProducerStore":
        """Packets from a size manifest alone (no real payload encoding)."""
        packets: dict[tuple[str, ...], DataPacket] = {}
        for g, sizes in catalog.gofs.items():
            for pkt in make_data_packets(
                top_layer_name(catalog.dataset, catalog.window, g), sizes.top, mtu
            ):
                packets[pkt.name.components] = pkt
            for label in SEGMENT_LABELS:
                for pkt in make_data_packets(
                    segment_name(catalog.dataset, catalog.window, g, label),
                    sizes.segments[label],
                    mtu,
                ):
                    packets[pkt.name.components] = pkt
        for pkt in make_data_packets(
            metadata_name(catalog.dataset), len(catalog.to_json()), mtu
        ):
            packets[pkt.name.components] = pkt
        return cls(catalog, packets)


class Producer:
    """Origin host machine: answers interests from its store."""

    def __init__(self, store: ProducerStore):
        self.store = store
        self.counters = ProducerCounters()
        # chunks fetched at least once; distinguishes first fetches from
        # retry traffic when judging how well the network shielded us
        self._served_once: set[tuple[str, ...]] = set()

    def handler(self, now: int, face: int, packet: object) -> list[tuple[int, object]]:
        if not isinstance(packet, Interest):
            return []
        key = packet.name.components
        pkt = self.store.packets.get(key)
        if pkt is None:
            self.counters.not_found += 1
            return []
        self.counters.served += 1
        if key not in self._served_once:
            self._served_once.add(key)
            self.counters.unique_served += 1
        return [(face, pkt)]


# ---------------------------------------------------------------------------
# Bandwidth estimation
# ---------------------------------------------------------------------------


class BandwidthEstimator:
    """EWMA bandwidth estimate over fixed time bins of Data arrivals.

    goodput mode (default): each bin with traffic contributes
    bytes-received over the covered span of the bin; bins covered less
    than half their width are skipped so a transfer tail does not drag
    the estimate down.  While the pipe is kept full this tracks the
    bottleneck rate.

    capacity mode: consecutive arrivals inside one bin give packet-pair
    rate samples (second packet's wire bits over the gap) and the bin
    contributes its median.  Robust to transport stalls, so a sender
    whose congestion control backs off still sees the path capacity.

    Idle bins never update either mode.
    """

    def __init__(self, bin_ns: int = EST_BIN_NS, alpha: float = EST_ALPHA,
                 mode: str = "goodput"):
        if mode not in ("goodput", "capacity"):
            raise EndpointError(f"unknown estimator mode: {mode}")
        self.bin_ns = bin_ns
        self.alpha = alpha
        self.mode = mode
        self._bin = -1
        self._bin_bytes = 0
        self._bin_first = 0
        self._rates: list[float] = []
        self._last_arrival = -1
        self._estimate: float | None = None

    def on_data(self, now: int, wire_bytes: int) -> None:
        b = now // self.bin_ns
        if b != self._bin:
            self._close_bin()
            self._bin = b
            self._bin_first = now
            self._bin_bytes = wire_bytes
            self._last_arrival = now
            return
        if self.mode == "capacity":
            gap = now - self._last_arrival
            if gap > 0:
                self._rates.append(wire_bytes * 8 * SEC / gap)
        self._bin_bytes += wire_bytes
        self._last_arrival = now

    def _close_bin(self) -> None:
        sample: float | None = None
        if self.mode == "capacity":
            if self._rates:
                self._rates.sort()
                sample = self._rates[len(self._rates) // 2]
                self._rates = []
        elif self._bin >= 0:
            bin_start = self._bin * self.bin_ns
            covered = self._last_arrival - max(bin_start, self._bin_first)
            if covered * 2 >= self.bin_ns:
                sample = self._bin_bytes * 8 * SEC / covered
        self._bin_bytes = 0
        if sample is None:
            return
        if self._estimate is None:
            self._estimate = sample
        else:
            self._estimate += self.alpha * (sample - self._estimate)

    def estimate_bps(self) -> float | None:
        return self._estimate


def select_levels(
    est_bps: float | None,
    gof_bytes: dict[str, int],
    frame_budget_s: float = 1.0,
    safety: float = BUDGET_FRACTION,
) -> tuple[str, ...]:
    """Greedy ladder fill against the per-GoF byte budget.

    The top layer and the base tier are always requested; each further
    rung joins while the cumulative requirement (top layer plus all
    tiers through that rung) stays within safety * est_bps *
    frame_budget_s / 8 bytes.  No estimate yet means floor quality.
    """
    floor = (TOP_LAYER, SEGMENT_LABELS[0])
    if est_bps is None:
        return floor
    budget = est_bps * frame_budget_s * safety / 8.0
    cumulative = gof_bytes[TOP_LAYER] + gof_bytes[SEGMENT_LABELS[0]]
    chosen = list(floor)
    for rung in range(1, len(SEGMENT_LABELS)):
        cumulative += gof_bytes[SEGMENT_LABELS[rung]]
        if cumulative <= budget:
            chosen.append(SEGMENT_LABELS[rung])
        else:
            break
    return tuple(chosen)


# ---------------------------------------------------------------------------
# Consumer
# ---------------------------------------------------------------------------


@dataclass
class GofRecord:
    gof: int
    levels: tuple[str, ...]
    chunks_total: int
    first_send: int | None = None
    completed_at: int | None = None
    chunks_failed: int = 0
    payload_bytes: int = 0


@dataclass
class _Pending:
    name: Name
    gof: int  # 0 = metadata
    label: str
    payload_len: int
    sent_at: int
    retries: int = 0


@dataclass
class ConsumerCounters:
    interests_sent: int = 0
    retransmissions: int = 0
    data_received: int = 0
    late_data: int = 0
    abandoned_chunks: int = 0


class Consumer:
    """Sequential GoF streamer over one access face."""

    def __init__(
        self,
        world: SimWorld,
        host: Host,
        catalog: Catalog,
        index: int,
        start_at_ns: int = 0,
        face: int = 0,
        window: int = DEFAULT_WINDOW,
        budget_fraction: float = BUDGET_FRACTION,
        max_gof: int | None = None,
        local_cs: ContentStore | None = None,
        estimator_mode: str = "goodput",
    ):
        self.world = world
        self.host = host
        self.catalog = catalog
        self.index = index
        self.start_at = start_at_ns
        self.face = face
        self.window = window
        self.budget_fraction = budget_fraction
        if max_gof is None:
            max_gof = max(catalog.gofs)
        elif max_gof not in catalog.gofs:
            raise EndpointError(f"max_gof {max_gof} not in the catalog")
        self.max_gof = max_gof
        self.local_cs = local_cs

        self.estimator = BandwidthEstimator(mode=estimator_mode)
        self.counters = ConsumerCounters()
        self.records: list[GofRecord] = []
        self.packets_by_label: dict[str, int] = {}
        self.bytes_by_label: dict[str, int] = {}
        self.done_at: int | None = None

        self._nonce_seq = 0
        self._rtt_ewma: float | None = None
        self._queue: list[tuple[Name, int, str, int]] = []  # name, gof, label, size
        self._queue_pos = 0
        self._pending: dict[tuple[str, ...], _Pending] = {}
        self._gof_outstanding = 0
        self._current: GofRecord | None = None
        self._meta_outstanding = 0
        self._scan_armed = False

        host.handler = self._on_packet
        world.schedule_at(start_at_ns, self._begin)

    # -- helpers --------------------------------------------------------

    def _nonce(self) -> int:
        self._nonce_seq += 1
        return (self.index << 20) | self._nonce_seq

    def _timeout_ns(self) -> int:
        if self._rtt_ewma is None:
            return 2 * MIN_TIMEOUT_NS
        return max(int(2 * self._rtt_ewma), MIN_TIMEOUT_NS)

    def _arm_scan(self) -> None:
        if not self._scan_armed:
            self._scan_armed = True
            self.world.schedule(TIMEOUT_SCAN_NS, self._scan)

    # -- startup ----------------------------------------------------------

    def _begin(self) -> None:
        meta = metadata_name(self.catalog.dataset)
        names = chunk_names(meta, len(self.catalog.to_json()))
        self._meta_outstanding = len(names)
        for nm in names:
            self._queue.append((nm, 0, METADATA, 0))
        self._pump()

    def _start_gof(self, gof: int) -> None:
        sizes = self.catalog.gofs[gof]
        levels = select_levels(
            self.estimator.estimate_bps(),
            {TOP_LAYER: sizes.top, **sizes.segments},
            frame_budget_s=self.catalog.gof_duration_ns / SEC,
            safety=self.budget_fraction,
        )
        entries: list[tuple[Name, int, str, int]] = []
        for label in levels:
            if label == TOP_LAYER:
                base = top_layer_name(self.catalog.dataset, self.catalog.window, gof)
                total = sizes.top
            else:
                base = segment_name(self.catalog.dataset, self.catalog.window, gof, label)
                total = sizes.segments[label]
            for nm in chunk_names(base, total):
                entries.append((nm, gof, label, total))
        rec = GofRecord(gof=gof, levels=levels, chunks_total=len(entries))
        self._current = rec
        self.records.append(rec)
        self._gof_outstanding = len(entries)
        self._queue.extend(entries)
        self._pump()

    def _nominal_start(self, gof: int) -> int:
        return self.start_at + (gof - 1) * self.catalog.gof_duration_ns

    # -- interest pipeline ------------------------------------------------

    def _pump(self) -> None:
        while len(self._pending) < self.window and self._queue_pos < len(self._queue):
            name, gof, label, _ = self._queue[self._queue_pos]
            self._queue_pos += 1
            self._send(name, gof, label)
        if self._pending:
            self._arm_scan()

    def _send(self, name: Name, gof: int, label: str) -> None:
        now = self.world.now
        if gof and self._current is not None and self._current.first_send is None:
            self._current.first_send = now
        if self.local_cs is not None and self.local_cs.lookup(name) is not None:
            # satisfied locally; counts as an instant delivery
            p = _Pending(name=name, gof=gof, label=label, payload_len=0, sent_at=now)
            self._resolve_chunk(p, delivered=True)
            return
        self._pending[name.components] = _Pending(
            name=name, gof=gof, label=label, payload_len=0, sent_at=now
        )
        self.counters.interests_sent += 1
        self.host.send(self.face, Interest(name, self._nonce()))

    def _scan(self) -> None:
        self._scan_armed = False
        now = self.world.now
        timeout = self._timeout_ns()
        to_abandon = []
        for key, p in self._pending.items():
            if now - p.sent_at < timeout:
                continue
            if p.retries >= MAX_RETRIES:
                to_abandon.append(key)
                continue
            p.retries += 1
            p.sent_at = now
            self.counters.retransmissions += 1
            self.counters.interests_sent += 1
            self.host.send(self.face, Interest(p.name, self._nonce()))
        for key in to_abandon:
            p = self._pending.pop(key)
            self.counters.abandoned_chunks += 1
            self._resolve_chunk(p, delivered=False)
        if self._pending:
            self._arm_scan()
        self._pump()

    # -- data path ----------------------------------------------------------

    def _on_packet(self, now: int, face: int, packet: object) -> list:
        if not isinstance(packet, DataPacket):
            return []
        p = self._pending.pop(packet.name.components, None)
        if p is None:
            self.counters.late_data += 1
            return []
        self.counters.data_received += 1
        if self.local_cs is not None:
            self.local_cs.insert(packet)
        self.estimator.on_data(now, packet.wire_size())
        if p.retries == 0:  # Karn: only clean samples train the RTT
            sample = now - p.sent_at
            if self._rtt_ewma is None:
                self._rtt_ewma = float(sample)
            else:
                self._rtt_ewma += RTT_ALPHA * (sample - self._rtt_ewma)
        self.packets_by_label[p.label] = self.packets_by_label.get(p.label, 0) + 1
        self.bytes_by_label[p.label] = (
            self.bytes_by_label.get(p.label, 0) + packet.payload_len
        )
        if p.gof and self._current is not None:
            self._current.payload_bytes += packet.payload_len
        self._resolve_chunk(p, delivered=True)
        self._pump()
        return []

    def _resolve_chunk(self, p: _Pending, delivered: bool) -> None:
        if p.gof == 0:
            self._meta_outstanding -= 1
            if not delivered:
                raise EndpointError(
                    f"consumer {self.index} failed to fetch the catalog"
                )
            if self._meta_outstanding == 0:
                self._queue = []
                self._queue_pos = 0
                self._start_gof(1)
            return
        rec = self._current
        if rec is None or p.gof != rec.gof:
            return
        if not delivered:
            rec.chunks_failed += 1
        self._gof_outstanding -= 1
        if self._gof_outstanding == 0:
            if rec.chunks_failed == 0:
                rec.completed_at = self.world.now
            self._advance(rec.gof)

    def _advance(self, finished_gof: int) -> None:
        self._queue = []
        self._queue_pos = 0
        if finished_gof >= self.max_gof:
            self.done_at = self.world.now
            return
        nxt = finished_gof + 1
        at = max(self.world.now, self._nominal_start(nxt))
        self.world.schedule_at(at, lambda: self._start_gof(nxt))
