"""Segment-streaming baseline over a Reno-style reliable transport.

Consumers fetch whole GoF representation objects from an edge cache
(or the origin when no cache is on the path).  Each transfer is a fresh
reliable stream: slow start from a small initial window, fast
retransmit on three duplicate acks, a halved window per loss event and
a 200 ms floor on the retransmission timeout.  Delivery is strictly
in order, so one lost segment blocks everything behind it until the
retransmission lands: frame-level head-of-line blocking.

Caches store only complete representation objects and answer only
exact (GoF, representation) matches.  Concurrent requests for an
object already being fetched join the pending fetch; the joiners count
as hits since the upstream fetch is shared.

Two consumer variants share this transport and differ only in rate
adaptation: dash_pc applies the throughput rule as-is, pcc_dash pulls
the choice one rung down whenever its playout buffer is below a
two-GoF target.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .endpoints import (
    BUDGET_FRACTION,
    EndpointError,
    BandwidthEstimator,
    Catalog,
    GofRecord,
)
from .naming import SEGMENT_LABELS
from .netsim import MS, SEC, Host, SimWorld, Topology, next_hop_faces
from .wire import HEADER_OVERHEAD, MTU_PAYLOAD, chunk_payload_sizes

GOF_DURATION_NS = 1 * SEC

INIT_CWND = 10.0
INIT_SSTHRESH = 128.0
DUPACK_THRESHOLD = 3
MIN_RTO_NS = 200 * MS
RTO_BACKOFF_LIMIT = 6  # doublings before the backoff caps
MAX_RTO_STREAK = 10  # consecutive timeouts before the transfer aborts
ACK_EVERY = 2  # delayed ack stride for in-order segments
DELACK_TIMER_NS = 40 * MS  # flush a withheld ack when the flow pauses
REQUEST_RETRY_NS = 200 * MS  # re-send a request until data starts flowing
REQUEST_RETRY_LIMIT = 8
TRANSFER_DEADLINE_NS = 30 * SEC

REPR_LEVELS = ("30", "50", "75", "100")

# object capacity of a cache: the content-store packet budget expressed
# in bytes of full-size packets
CACHE_CAPACITY_BYTES = 65536 * (MTU_PAYLOAD + HEADER_OVERHEAD)


class DashError(RuntimeError):
    """Raised for inconsistent baseline configuration."""


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


def representation_bytes(catalog: Catalog, gof: int) -> dict[str, int]:
    """Full-version object sizes: each level carries the top layer plus
    the cumulative tier content through that retention, so the level-100
    object equals the sum of all five layered segments."""
    sizes = catalog.gofs[gof]
    out: dict[str, int] = {}
    cum = sizes.top
    for level, label in zip(REPR_LEVELS, SEGMENT_LABELS):
        cum += sizes.segments[label]
        out[level] = cum
    return out


def abr_select(
    est_bps: float | None,
    repr_bytes: dict[str, int],
    frame_budget_s: float = 1.0,
    safety: float = BUDGET_FRACTION,
) -> str:
    """Highest representation whose per-GoF bytes fit the throughput
    budget; floors at the base level."""
    if est_bps is None:
        return REPR_LEVELS[0]
    budget = est_bps * frame_budget_s * safety / 8.0
    chosen = REPR_LEVELS[0]
    for level in REPR_LEVELS[1:]:
        if repr_bytes[level] <= budget:
            chosen = level
    return chosen


def object_id(dataset: str, window: str, gof: int, level: str) -> str:
    return f"{dataset}/{window}/GoF_{gof:04d}/repr_{level}"


# ---------------------------------------------------------------------------
# Wire messages
# ---------------------------------------------------------------------------


class Request:
    __slots__ = ("src", "dst", "flow", "object", "size")

    def __init__(self, src: str, dst: str, flow: int, obj: str, size: int):
        self.src = src
        self.dst = dst
        self.flow = flow
        self.object = obj
        self.size = size

    def wire_size(self) -> int:
        return HEADER_OVERHEAD + len(self.object)


class Segment:
    __slots__ = ("src", "dst", "flow", "seq", "total", "payload_len")

    def __init__(self, src: str, dst: str, flow: int, seq: int, total: int,
                 payload_len: int):
        self.src = src
        self.dst = dst
        self.flow = flow
        self.seq = seq
        self.total = total
        self.payload_len = payload_len

    def wire_size(self) -> int:
        return HEADER_OVERHEAD + self.payload_len


class Ack:
    __slots__ = ("src", "dst", "flow", "cum")

    def __init__(self, src: str, dst: str, flow: int, cum: int):
        self.src = src
        self.dst = dst
        self.flow = flow
        self.cum = cum

    def wire_size(self) -> int:
        return HEADER_OVERHEAD


# ---------------------------------------------------------------------------
# Reliable stream
# ---------------------------------------------------------------------------


@dataclass
class SenderCounters:
    segments_sent: int = 0
    retransmissions: int = 0
    fast_retx: int = 0
    timeouts: int = 0


class ReliableSender:
    """One object transfer toward one peer.

    Classic Reno semantics on cumulative acks: slow start grows the
    window by one per ack below ssthresh and by 1/cwnd above it; the
    third duplicate ack triggers a single fast retransmit per window
    with ssthresh = cwnd/2 and cwnd = ssthresh; any further hole in the
    same flight must wait for the retransmission timer, which resets
    cwnd to 1.  Retransmitted segments never train the RTT (Karn).
    """

    def __init__(self, world: SimWorld, host: Host, face: int, dst: str,
                 flow: int, total_bytes: int, mtu: int = MTU_PAYLOAD,
                 on_complete=None, on_abort=None):
        self.world = world
        self.host = host
        self.face = face
        self.dst = dst
        self.flow = flow
        self.sizes = chunk_payload_sizes(total_bytes, mtu)
        self.total = len(self.sizes)
        self.counters = SenderCounters()
        self.on_complete = on_complete
        self.on_abort = on_abort

        self.snd_una = 0
        self.snd_nxt = 0
        self.cwnd = INIT_CWND
        self.ssthresh = INIT_SSTHRESH
        self.dupacks = 0
        self.in_recovery = False
        self.recover = 0
        self.rtt_ewma: float | None = None
        self.rto_ns = 2 * MIN_RTO_NS
        self.rto_streak = 0
        self.done = False
        self._send_time: dict[int, int] = {}
        self._retx: set[int] = set()
        self._timer_gen = 0

    # -- timers ----------------------------------------------------------

    def _base_rto(self) -> int:
        if self.rtt_ewma is None:
            return 2 * MIN_RTO_NS
        return max(int(2 * self.rtt_ewma), MIN_RTO_NS)

    def _arm(self) -> None:
        self._timer_gen += 1
        gen = self._timer_gen
        self.world.schedule(self.rto_ns, lambda: self._on_timeout(gen))

    def _cancel(self) -> None:
        self._timer_gen += 1

    # -- transmit ----------------------------------------------------------

    def start(self) -> None:
        self.rto_ns = self._base_rto()
        self._fill_window()

    def _emit(self, seq: int) -> None:
        self.counters.segments_sent += 1
        self.host.send(self.face, Segment(
            self.host.name, self.dst, self.flow, seq, self.total, self.sizes[seq]))

    def _fill_window(self) -> None:
        sent = False
        limit = self.snd_una + int(self.cwnd)
        while self.snd_nxt < self.total and self.snd_nxt < limit:
            self._send_time[self.snd_nxt] = self.world.now
            self._emit(self.snd_nxt)
            self.snd_nxt += 1
            sent = True
        if sent and self.snd_una < self.snd_nxt:
            self._arm()

    def _retransmit(self, seq: int) -> None:
        self.counters.retransmissions += 1
        self._retx.add(seq)
        self._emit(seq)

    # -- events ----------------------------------------------------------

    def on_ack(self, cum: int) -> None:
        if self.done:
            return
        nxt_una = cum + 1
        if nxt_una > self.snd_una:
            if cum not in self._retx and cum in self._send_time:
                sample = self.world.now - self._send_time[cum]
                if self.rtt_ewma is None:
                    self.rtt_ewma = float(sample)
                else:
                    self.rtt_ewma += 0.125 * (sample - self.rtt_ewma)
            for seq in range(self.snd_una, nxt_una):
                self._send_time.pop(seq, None)
                self._retx.discard(seq)
            self.snd_una = nxt_una
            self.dupacks = 0
            self.rto_streak = 0
            self.rto_ns = self._base_rto()
            if self.in_recovery and self.snd_una > self.recover:
                self.in_recovery = False
            if self.cwnd < self.ssthresh:
                self.cwnd += 1.0
            else:
                self.cwnd += 1.0 / self.cwnd
            if self.snd_una >= self.total:
                self.done = True
                self._cancel()
                if self.on_complete is not None:
                    self.on_complete(self.world.now)
                return
            self._arm()
            self._fill_window()
            return
        if self.snd_una < self.snd_nxt:
            self.dupacks += 1
            if self.dupacks == DUPACK_THRESHOLD and not self.in_recovery:
                self.ssthresh = max(2.0, self.cwnd / 2.0)
                self.cwnd = self.ssthresh
                self.in_recovery = True
                self.recover = self.snd_nxt
                self.counters.fast_retx += 1
                self._retransmit(self.snd_una)
                self._arm()

    def _on_timeout(self, gen: int) -> None:
        if gen != self._timer_gen or self.done:
            return
        self.rto_streak += 1
        if self.rto_streak > MAX_RTO_STREAK:
            self.done = True
            self._cancel()
            if self.on_abort is not None:
                self.on_abort(self.world.now)
            return
        self.counters.timeouts += 1
        self.ssthresh = max(2.0, self.cwnd / 2.0)
        self.cwnd = 1.0
        self.dupacks = 0
        self.in_recovery = False
        self.rto_ns = min(self.rto_ns * 2,
                          self._base_rto() << RTO_BACKOFF_LIMIT)
        self._retransmit(self.snd_una)
        self._arm()


class ReliableReceiver:
    """Reordering buffer with strictly in-order delivery upward."""

    def __init__(self, host: Host, face: int, dst: str, flow: int,
                 on_progress=None, on_complete=None):
        self.host = host
        self.face = face
        self.dst = dst
        self.flow = flow
        self.cum = -1
        self.total: int | None = None
        self.inorder_bytes = 0
        self.duplicates = 0
        self.on_progress = on_progress
        self.on_complete = on_complete
        self._buffer: dict[int, int] = {}
        self._unacked = 0
        self._delack_gen = 0
        self.completed_at: int | None = None

    def _ack(self) -> None:
        self._unacked = 0
        self._delack_gen += 1
        self.host.send(self.face, Ack(self.host.name, self.dst, self.flow, self.cum))

    def _arm_delack(self) -> None:
        # a withheld ack must not rely on further arrivals: flush it on a
        # short timer so a paused sender is not forced into a timeout
        self._delack_gen += 1
        gen = self._delack_gen
        self.host.world.schedule(DELACK_TIMER_NS, lambda: self._flush(gen))

    def _flush(self, gen: int) -> None:
        if gen == self._delack_gen and self._unacked > 0:
            self._ack()

    def on_segment(self, now: int, seg: Segment) -> None:
        if self.total is None:
            self.total = seg.total
        if seg.seq <= self.cum or seg.seq in self._buffer:
            self.duplicates += 1
            self._ack()
            return
        if seg.seq != self.cum + 1:
            self._buffer[seg.seq] = seg.payload_len
            self._ack()  # duplicate ack signals the hole
            return
        advanced = seg.payload_len
        self.cum += 1
        self._unacked += 1
        while self.cum + 1 in self._buffer:
            advanced += self._buffer.pop(self.cum + 1)
            self.cum += 1
            self._unacked += 1
        self.inorder_bytes += advanced
        if self.on_progress is not None:
            self.on_progress(now, advanced)
        if self.total is not None and self.cum >= self.total - 1:
            self.completed_at = now
            self._ack()
            if self.on_complete is not None:
                self.on_complete(now)
            return
        if self._unacked >= ACK_EVERY:
            self._ack()
        else:
            self._arm_delack()


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------


@dataclass
class CacheCounters:
    hits: int = 0
    misses: int = 0
    insertions: int = 0
    evictions: int = 0


class CdnCache:
    """LRU over whole representation objects, bounded by total bytes."""

    def __init__(self, capacity_bytes: int = CACHE_CAPACITY_BYTES):
        if capacity_bytes < 0:
            raise DashError(f"negative cache capacity: {capacity_bytes}")
        self.capacity_bytes = capacity_bytes
        self.used_bytes = 0
        self.counters = CacheCounters()
        self._store: OrderedDict[str, int] = OrderedDict()

    def lookup(self, obj: str) -> int | None:
        size = self._store.get(obj)
        if size is None:
            self.counters.misses += 1
            return None
        self._store.move_to_end(obj)
        self.counters.hits += 1
        return size

    def insert(self, obj: str, size: int) -> None:
        if size > self.capacity_bytes:
            return
        if obj in self._store:
            self._store.move_to_end(obj)
            return
        while self.used_bytes + size > self.capacity_bytes:
            _, evicted = self._store.popitem(last=False)
            self.used_bytes -= evicted
            self.counters.evictions += 1
        self._store[obj] = size
        self.used_bytes += size
        self.counters.insertions += 1

    def __contains__(self, obj: str) -> bool:
        return obj in self._store

    def __len__(self) -> int:
        return len(self._store)


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------


class DashNode:
    """Shared routing shell: packets not addressed here are forwarded
    toward their destination, everything else is dispatched to the
    node's flow table."""

    def __init__(self, world: SimWorld, host: Host, routes: dict[str, int]):
        self.world = world
        self.host = host
        self.routes = routes
        self.senders: dict[int, ReliableSender] = {}
        self.receivers: dict[int, ReliableReceiver] = {}
        host.handler = self.handler

    def _face_toward(self, dst: str) -> int:
        try:
            return self.routes[dst]
        except KeyError:
            raise DashError(f"{self.host.name} has no route toward {dst}") from None

    def handler(self, now: int, face: int, packet: object) -> list:
        dst = getattr(packet, "dst", None)
        if dst is None:
            return []
        if dst != self.host.name:
            return [(self._face_toward(dst), packet)]
        if isinstance(packet, Ack):
            sender = self.senders.get(packet.flow)
            if sender is not None:
                sender.on_ack(packet.cum)
        elif isinstance(packet, Segment):
            receiver = self.receivers.get(packet.flow)
            if receiver is not None:
                self.on_segment_arrival(now, packet)
                receiver.on_segment(now, packet)
        elif isinstance(packet, Request):
            self.on_request(now, packet)
        return []

    def on_segment_arrival(self, now: int, seg: Segment) -> None:
        pass

    def on_request(self, now: int, req: Request) -> None:
        pass

    def open_sender(self, dst: str, flow: int, total_bytes: int,
                    on_complete=None, on_abort=None) -> ReliableSender:
        sender = ReliableSender(
            self.world, self.host, self._face_toward(dst), dst, flow,
            total_bytes, on_complete=on_complete, on_abort=on_abort)
        self.senders[flow] = sender
        sender.start()
        return sender

    def send_request(self, req: Request) -> None:
        """Fire a request and keep re-sending it on a backoff timer until
        the flow's receiver has heard from the other side; the request
        itself is not covered by the stream's loss recovery."""
        face = self._face_toward(req.dst)

        def _try(attempt: int) -> None:
            receiver = self.receivers.get(req.flow)
            if receiver is None or receiver.total is not None:
                return
            self.host.send(face, req)
            if attempt < REQUEST_RETRY_LIMIT:
                self.world.schedule(REQUEST_RETRY_NS << attempt,
                                    lambda: _try(attempt + 1))

        _try(0)

    def retransmission_total(self) -> int:
        return sum(s.counters.retransmissions for s in self.senders.values())


class DashOrigin(DashNode):
    """Full-version store; streams any requested object."""

    def __init__(self, world: SimWorld, host: Host, routes: dict[str, int],
                 objects: dict[str, int]):
        super().__init__(world, host, routes)
        self.objects = objects
        self.served = 0
        self.not_found = 0

    def on_request(self, now: int, req: Request) -> None:
        if req.flow in self.senders:  # retried request, already serving
            return
        size = self.objects.get(req.object)
        if size is None:
            self.not_found += 1
            return
        self.served += 1
        self.open_sender(req.src, req.flow, size)


class DashCacheNode(DashNode):
    """Edge cache: serves hits locally, fetches whole objects from the
    origin on a miss and coalesces concurrent requests for the same
    object into one upstream fetch."""

    def __init__(self, world: SimWorld, host: Host, routes: dict[str, int],
                 origin: str, index: int,
                 capacity_bytes: int = CACHE_CAPACITY_BYTES):
        super().__init__(world, host, routes)
        self.origin = origin
        self.index = index
        self.cache = CdnCache(capacity_bytes)
        self._flow_seq = 0
        # object -> list of (consumer, flow) awaiting the pending fetch
        self._pending: dict[str, list[tuple[str, int]]] = {}

    def _next_flow(self) -> int:
        self._flow_seq += 1
        return ((1000 + self.index) << 32) | self._flow_seq

    def on_request(self, now: int, req: Request) -> None:
        if req.flow in self.senders:  # retried request, already serving
            return
        waiters = self._pending.get(req.object)
        if waiters is not None:
            if (req.src, req.flow) not in waiters:
                # the upstream fetch is shared, so joining counts as a hit
                self.cache.counters.hits += 1
                waiters.append((req.src, req.flow))
            return
        size = self.cache.lookup(req.object)
        if size is not None:
            self.open_sender(req.src, req.flow, size)
            return
        self._pending[req.object] = [(req.src, req.flow)]
        fetch_flow = self._next_flow()
        obj = req.object

        def _fetched(_now: int) -> None:
            receiver = self.receivers.pop(fetch_flow)
            size = receiver.inorder_bytes
            self.cache.insert(obj, size)
            for consumer, flow in self._pending.pop(obj, []):
                self.open_sender(consumer, flow, size)

        def _expired() -> None:
            # a wedged upstream fetch must not pin the object forever;
            # the waiting consumers run their own deadlines
            if fetch_flow in self.receivers:
                del self.receivers[fetch_flow]
                self._pending.pop(obj, None)

        self.receivers[fetch_flow] = ReliableReceiver(
            self.host, self._face_toward(self.origin), self.origin, fetch_flow,
            on_complete=_fetched)
        self.world.schedule(TRANSFER_DEADLINE_NS, _expired)
        self.send_request(
            Request(self.host.name, self.origin, fetch_flow, obj, req.size))


class DashConsumer(DashNode):
    """Sequential GoF fetcher with throughput-rule rate adaptation.

    variant dash_pc applies abr_select directly; pcc_dash additionally
    steps the choice one level down while the playout buffer holds less
    than two GoFs.  A fetch begins at its nominal GoF boundary or as
    soon as the previous transfer resolves, whichever is later.
    """

    def __init__(
        self,
        world: SimWorld,
        host: Host,
        routes: dict[str, int],
        catalog: Catalog,
        server: str,
        index: int,
        variant: str = "dash_pc",
        start_at_ns: int = 0,
        safety: float = BUDGET_FRACTION,
        max_gof: int | None = None,
        estimator_mode: str = "capacity",
    ):
        if variant not in ("dash_pc", "pcc_dash"):
            raise DashError(f"unknown variant: {variant}")
        super().__init__(world, host, routes)
        self.catalog = catalog
        self.server = server
        self.index = index
        self.variant = variant
        self.start_at = start_at_ns
        self.safety = safety
        if max_gof is None:
            max_gof = max(catalog.gofs)
        elif max_gof not in catalog.gofs:
            raise EndpointError(f"max_gof {max_gof} not in the catalog")
        self.max_gof = max_gof

        self.estimator = BandwidthEstimator(mode=estimator_mode)
        self.records: list[GofRecord] = []
        self.packets_by_label: dict[str, int] = {}
        self.bytes_by_label: dict[str, int] = {}
        self.duplicates = 0
        self.done_at: int | None = None
        self._flow_seq = 0
        self._level_by_flow: dict[int, str] = {}
        self._deadline_gen = 0

        world.schedule_at(start_at_ns, lambda: self._start_gof(1))

    # -- helpers ----------------------------------------------------------

    def _next_flow(self) -> int:
        self._flow_seq += 1
        return (self.index << 32) | self._flow_seq

    def _nominal_start(self, gof: int) -> int:
        return self.start_at + (gof - 1) * self.catalog.gof_duration_ns

    def _buffer_gofs(self, now: int) -> float:
        """Completed GoFs ahead of the playhead; playback of GoF g runs
        over [start + (g-1)*dur, start + g*dur)."""
        completed = sum(1 for r in self.records if r.completed_at is not None)
        dur = self.catalog.gof_duration_ns
        played = max(0.0, (now - self.start_at) / dur)
        return max(0.0, completed - played)

    def _choose_level(self, now: int, gof: int) -> str:
        reprs = representation_bytes(self.catalog, gof)
        level = abr_select(
            self.estimator.estimate_bps(), reprs,
            frame_budget_s=self.catalog.gof_duration_ns / SEC,
            safety=self.safety)
        if self.variant == "pcc_dash" and self._buffer_gofs(now) < 2.0:
            idx = REPR_LEVELS.index(level)
            if idx > 0:
                level = REPR_LEVELS[idx - 1]
        return level

    # -- transfer lifecycle -------------------------------------------------

    def _start_gof(self, gof: int) -> None:
        now = self.world.now
        level = self._choose_level(now, gof)
        size = representation_bytes(self.catalog, gof)[level]
        obj = object_id(self.catalog.dataset, self.catalog.window, gof, level)
        flow = self._next_flow()
        rec = GofRecord(gof=gof, levels=(level,), chunks_total=0, first_send=now)
        self.records.append(rec)
        self._level_by_flow[flow] = level

        def _done(t: int) -> None:
            self.receivers.pop(flow, None)
            self._level_by_flow.pop(flow, None)
            rec.completed_at = t
            rec.chunks_total = receiver.total or 0
            self.duplicates += receiver.duplicates
            self._advance(gof)

        receiver = ReliableReceiver(
            self.host, self._face_toward(self.server), self.server, flow,
            on_progress=lambda t, n: self._on_bytes(rec, n),
            on_complete=_done)
        self.receivers[flow] = receiver
        self._deadline_gen += 1
        gen = self._deadline_gen
        self.world.schedule(TRANSFER_DEADLINE_NS, lambda: self._give_up(gen, flow, rec, gof))
        self.send_request(Request(self.host.name, self.server, flow, obj, size))

    def _on_bytes(self, rec: GofRecord, n: int) -> None:
        rec.payload_bytes += n

    def _give_up(self, gen: int, flow: int, rec: GofRecord, gof: int) -> None:
        if gen != self._deadline_gen or rec.completed_at is not None:
            return
        receiver = self.receivers.pop(flow, None)
        if receiver is None:
            return
        self._level_by_flow.pop(flow, None)
        rec.chunks_total = receiver.total or 0
        rec.chunks_failed = max(1, rec.chunks_total - (receiver.cum + 1))
        self.duplicates += receiver.duplicates
        self._advance(gof)

    def _advance(self, finished_gof: int) -> None:
        if finished_gof >= self.max_gof:
            self.done_at = self.world.now
            return
        nxt = finished_gof + 1
        at = max(self.world.now, self._nominal_start(nxt))
        self.world.schedule_at(at, lambda: self._start_gof(nxt))

    # -- per-segment accounting ----------------------------------------------

    def on_segment_arrival(self, now: int, seg: Segment) -> None:
        self.estimator.on_data(now, HEADER_OVERHEAD + seg.payload_len)
        level = self._level_by_flow.get(seg.flow)
        if level is not None:
            self.packets_by_label[level] = self.packets_by_label.get(level, 0) + 1
            self.bytes_by_label[level] = (
                self.bytes_by_label.get(level, 0) + seg.payload_len)


# ---------------------------------------------------------------------------
# Wiring
# ---------------------------------------------------------------------------


def full_object_map(catalog: Catalog) -> dict[str, int]:
    """Every (GoF, representation) object the origin can serve."""
    out: dict[str, int] = {}
    for gof in catalog.gofs:
        for level, size in representation_bytes(catalog, gof).items():
            out[object_id(catalog.dataset, catalog.window, gof, level)] = size
    return out


def build_route_tables(
    topo: Topology, targets: list[str]
) -> dict[str, dict[str, int]]:
    """Per-host next-hop face toward each routable endpoint."""
    tables: dict[str, dict[str, int]] = {name: {} for name in topo.hosts}
    for dst in targets:
        for node, face in next_hop_faces(topo, dst).items():
            tables[node][dst] = face
    return tables


def _server_for(topo: Topology, consumer: str, origin: str,
                caches: set[str]) -> str:
    """First cache host on the consumer's shortest path to the origin,
    or the origin itself when the path has none."""
    toward = next_hop_faces(topo, origin)
    node = topo.hosts[consumer]
    while node.name != origin:
        link = node.links[toward[node.name]]
        node = link.other(node)
        if node.name in caches:
            return node.name
    return origin


@dataclass
class BaselineNet:
    """Assembled baseline overlay on one topology."""

    origin: DashOrigin
    caches: dict[str, DashCacheNode]
    consumers: list[DashConsumer]
    routers: dict[str, DashNode]

    def retransmission_total(self) -> int:
        total = self.origin.retransmission_total()
        for cache in self.caches.values():
            total += cache.retransmission_total()
        return total

    def cache_counters(self) -> CacheCounters:
        agg = CacheCounters()
        for cache in self.caches.values():
            c = cache.cache.counters
            agg.hits += c.hits
            agg.misses += c.misses
            agg.insertions += c.insertions
            agg.evictions += c.evictions
        return agg


def wire_baseline(
    topo: Topology,
    catalog: Catalog,
    variant: str = "dash_pc",
    starts_ns: list[int] | None = None,
    cache_capacity_bytes: int = CACHE_CAPACITY_BYTES,
    safety: float = BUDGET_FRACTION,
    max_gof: int | None = None,
    estimator_mode: str = "capacity",
) -> BaselineNet:
    """Attach origin, caches (on topo.cache_hosts), plain routers and
    consumers to an already built topology."""
    world = topo.world
    if starts_ns is None:
        starts_ns = [0] * len(topo.consumers)
    if len(starts_ns) != len(topo.consumers):
        raise DashError(
            f"{len(starts_ns)} start times for {len(topo.consumers)} consumers")

    endpoints = [topo.producer, *topo.cache_hosts, *topo.consumers]
    tables = build_route_tables(topo, endpoints)

    origin = DashOrigin(world, topo.hosts[topo.producer],
                        tables[topo.producer], full_object_map(catalog))
    caches = {
        name: DashCacheNode(world, topo.hosts[name], tables[name],
                            origin=topo.producer, index=i,
                            capacity_bytes=cache_capacity_bytes)
        for i, name in enumerate(topo.cache_hosts)
    }
    cache_set = set(topo.cache_hosts)
    consumers = []
    for i, cname in enumerate(topo.consumers):
        server = _server_for(topo, cname, topo.producer, cache_set)
        consumers.append(DashConsumer(
            world, topo.hosts[cname], tables[cname], catalog, server,
            index=i, variant=variant, start_at_ns=starts_ns[i],
            safety=safety, max_gof=max_gof, estimator_mode=estimator_mode))
    routers = {
        name: DashNode(world, topo.hosts[name], tables[name])
        for name in topo.hosts
        if name != topo.producer and name not in cache_set
        and name not in set(topo.consumers)
    }
    return BaselineNet(origin=origin, caches=caches, consumers=consumers,
                       routers=routers)
