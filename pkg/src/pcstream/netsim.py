"""Deterministic discrete-event network core.

Time is integer nanoseconds.  The event heap is keyed (time, seq) so
same-instant events run in scheduling order, and all randomness flows
through the world's single seeded generator, which makes every run a
pure function of its configuration.

Links are full duplex with independent per-direction state: a busy-until
horizon models serialization, a finish-time deque models the egress
queue (tail drop past queue_limit), and random loss is drawn per packet
at enqueue time, after the queue admits it.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MS = 1_000_000
SEC = 1_000_000_000


class SimError(RuntimeError):
    """Raised when the simulation reaches an inconsistent state."""


class SimWorld:
    """Event heap, clock and the run's only random generator."""

    def __init__(self, seed: int = 0):
        self.now: int = 0
        self.rng = np.random.default_rng(seed)
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self._stopped = False
        # optional per-packet trace sink: fn(time_ns, node, link, direction,
        # packet, outcome); None keeps the hot path branch-cheap
        self.tracer: Callable[[int, str, str, str, object, str], None] | None = None

    def schedule(self, delay_ns: int, fn: Callable[[], None]) -> None:
        if delay_ns < 0:
            raise SimError(f"cannot schedule into the past: delay {delay_ns}")
        self._seq += 1
        heapq.heappush(self._heap, (self.now + delay_ns, self._seq, fn))

    def schedule_at(self, t_ns: int, fn: Callable[[], None]) -> None:
        if t_ns < self.now:
            raise SimError(f"cannot schedule into the past: t {t_ns} < now {self.now}")
        self._seq += 1
        heapq.heappush(self._heap, (t_ns, self._seq, fn))

    def stop(self) -> None:
        self._stopped = True

    def run(self, until_ns: int | None = None) -> None:
        """Drain the heap, optionally stopping once the clock would pass
        until_ns (events at exactly until_ns still run)."""
        while self._heap and not self._stopped:
            t, _, fn = self._heap[0]
            if until_ns is not None and t > until_ns:
                self.now = until_ns
                return
            heapq.heappop(self._heap)
            self.now = t
            fn()
        if until_ns is not None and self.now < until_ns:
            self.now = until_ns


@dataclass
class DirectionStats:
    sent: int = 0
    delivered: int = 0
    dropped_overflow: int = 0
    dropped_loss: int = 0
    bytes_sent: int = 0
    bytes_delivered: int = 0
    bytes_dropped_overflow: int = 0
    bytes_dropped_loss: int = 0


class _Direction:
    __slots__ = ("busy_until", "queue", "stats")

    def __init__(self) -> None:
        self.busy_until = 0
        self.queue: deque[int] = deque()  # finish times of queued packets
        self.stats = DirectionStats()


class Host:
    """A node in the topology.

    Faces are link attachments indexed by position.  The handler is a
    callable (now, face_id, packet) -> list[(face_id, packet)] set by the
    protocol layer; returned actions are transmitted immediately.
    """

    def __init__(self, world: SimWorld, name: str):
        self.world = world
        self.name = name
        self.links: list[Link] = []
        self.handler: Callable[[int, int, object], list[tuple[int, object]]] | None = None

    def attach(self, link: "Link") -> int:
        self.links.append(link)
        return len(self.links) - 1

    def face_of(self, link: "Link") -> int:
        return self.links.index(link)

    def send(self, face_id: int, packet: object) -> None:
        self.links[face_id].transmit(self, packet)

    def deliver(self, face_id: int, packet: object) -> None:
        if self.handler is None:
            raise SimError(f"host {self.name} received a packet but has no handler")
        for out_face, out_pkt in self.handler(self.world.now, face_id, packet):
            self.send(out_face, out_pkt)

    def __repr__(self) -> str:  # debugging aid
        return f"Host({self.name})"


class Link:
    """Full-duplex point-to-point link with per-direction queue and loss."""

    def __init__(
        self,
        world: SimWorld,
        a: Host,
        b: Host,
        bandwidth_bps: int,
        prop_ns: int,
        queue_limit: int = 1000,
        loss_rate: float = 0.0,
        gilbert_elliott: tuple[float, float, float, float] | None = None,
    ):
        if bandwidth_bps <= 0:
            raise SimError(f"bandwidth must be positive: {bandwidth_bps}")
        if not (0.0 <= loss_rate <= 1.0):
            raise SimError(f"loss rate outside [0, 1]: {loss_rate}")
        self.world = world
        self.a = a
        self.b = b
        self.bandwidth_bps = bandwidth_bps
        self.prop_ns = prop_ns
        self.queue_limit = queue_limit
        self.loss_rate = loss_rate
        # (p_good_to_bad, p_bad_to_good, loss_good, loss_bad); None = Bernoulli
        self.gilbert_elliott = gilbert_elliott
        self._ge_bad = False
        self._dir = {a: _Direction(), b: _Direction()}  # keyed by sender
        self.face_a = a.attach(self)
        self.face_b = b.attach(self)
        self.name = f"{a.name}--{b.name}"

    def other(self, host: Host) -> Host:
        return self.b if host is self.a else self.a

    def stats(self, sender: Host) -> DirectionStats:
        return self._dir[sender].stats

    def ser_ns(self, wire_bytes: int) -> int:
        return (wire_bytes * 8 * SEC) // self.bandwidth_bps

    def _lossy(self) -> bool:
        ge = self.gilbert_elliott
        if ge is None:
            return self.loss_rate > 0.0 and self.world.rng.random() < self.loss_rate
        p_gb, p_bg, loss_good, loss_bad = ge
        rng = self.world.rng
        if self._ge_bad:
            if rng.random() < p_bg:
                self._ge_bad = False
        elif rng.random() < p_gb:
            self._ge_bad = True
        return rng.random() < (loss_bad if self._ge_bad else loss_good)

    def transmit(self, sender: Host, packet: object) -> None:
        """Queue a packet for the sender's direction; silently drops on
        queue overflow or random loss (the stats record both)."""
        d = self._dir[sender]
        st = d.stats
        size = packet.wire_size()
        st.sent += 1
        st.bytes_sent += size
        world = self.world
        now = world.now
        tr = world.tracer
        if tr is not None:
            tr(now, sender.name, self.name, "tx", packet, "sent")
        q = d.queue
        while q and q[0] <= now:
            q.popleft()
        if len(q) >= self.queue_limit:
            st.dropped_overflow += 1
            st.bytes_dropped_overflow += size
            if tr is not None:
                tr(now, sender.name, self.name, "tx", packet, "dropped_overflow")
            return
        if self._lossy():
            st.dropped_loss += 1
            st.bytes_dropped_loss += size
            if tr is not None:
                tr(now, sender.name, self.name, "tx", packet, "dropped_loss")
            return
        busy = d.busy_until
        finish = (busy if busy > now else now) + (size * 8 * SEC) // self.bandwidth_bps
        d.busy_until = finish
        q.append(finish)
        dst = self.other(sender)
        face = self.face_b if dst is self.b else self.face_a
        arrive = finish + self.prop_ns

        def _deliver() -> None:
            st.delivered += 1
            st.bytes_delivered += size
            if tr is not None:
                tr(world.now, dst.name, self.name, "rx", packet, "delivered")
            dst.deliver(face, packet)

        world._seq += 1
        heapq.heappush(world._heap, (arrive, world._seq, _deliver))


# ---------------------------------------------------------------------------
# Topologies
# ---------------------------------------------------------------------------


@dataclass
class Topology:
    world: SimWorld
    hosts: dict[str, Host]
    links: list[Link]
    producer: str
    consumers: list[str]
    forwarders: list[str]
    # names of hosts that run a cache in the baseline tree
    cache_hosts: list[str] = field(default_factory=list)

    def host(self, name: str) -> Host:
        return self.hosts[name]


@dataclass(frozen=True)
class LinkParams:
    bandwidth_bps: int
    prop_ns: int = 2 * MS
    queue_limit: int = 1000
    loss_rate: float = 0.0
    gilbert_elliott: tuple[float, float, float, float] | None = None


def _connect(topo_links: list[Link], world: SimWorld, hosts: dict[str, Host],
             a: str, b: str, p: LinkParams) -> None:
    topo_links.append(
        Link(world, hosts[a], hosts[b], p.bandwidth_bps, p.prop_ns,
             p.queue_limit, p.loss_rate, p.gilbert_elliott)
    )


def build_linear(world: SimWorld, params: LinkParams, n_consumers: int = 1,
                 interior: LinkParams | None = None) -> Topology:
    """consumer(s) -- fwd0 -- producer, for debugging and directed tests."""
    up = interior if interior is not None else params
    names = ["producer", "fwd0"] + [f"c{i}" for i in range(n_consumers)]
    hosts = {n: Host(world, n) for n in names}
    links: list[Link] = []
    _connect(links, world, hosts, "producer", "fwd0", up)
    for i in range(n_consumers):
        _connect(links, world, hosts, "fwd0", f"c{i}", params)
    return Topology(
        world=world,
        hosts=hosts,
        links=links,
        producer="producer",
        consumers=[f"c{i}" for i in range(n_consumers)],
        forwarders=["fwd0"],
    )


def build_inds_tree(world: SimWorld, params: LinkParams, n_consumers: int = 10,
                    interior: LinkParams | None = None) -> Topology:
    """Ten-forwarder access tree: producer feeds fwd0, two aggregation
    forwarders fan out to seven access forwarders, consumers round-robin
    over the access layer."""
    up = interior if interior is not None else params
    fwd_names = [f"fwd{i}" for i in range(10)]
    names = ["producer"] + fwd_names + [f"c{i}" for i in range(n_consumers)]
    hosts = {n: Host(world, n) for n in names}
    links: list[Link] = []
    _connect(links, world, hosts, "producer", "fwd0", up)
    _connect(links, world, hosts, "fwd0", "fwd1", up)
    _connect(links, world, hosts, "fwd0", "fwd2", up)
    for child in ("fwd3", "fwd4", "fwd5"):
        _connect(links, world, hosts, "fwd1", child, up)
    for child in ("fwd6", "fwd7", "fwd8"):
        _connect(links, world, hosts, "fwd2", child, up)
    _connect(links, world, hosts, "fwd3", "fwd9", up)
    access = ["fwd3", "fwd4", "fwd5", "fwd6", "fwd7", "fwd8", "fwd9"]
    consumers = []
    for i in range(n_consumers):
        cname = f"c{i}"
        _connect(links, world, hosts, access[i % len(access)], cname, params)
        consumers.append(cname)
    return Topology(
        world=world,
        hosts=hosts,
        links=links,
        producer="producer",
        consumers=consumers,
        forwarders=fwd_names,
    )


def build_cdn_tree(world: SimWorld, params: LinkParams, n_consumers: int = 10,
                   interior: LinkParams | None = None) -> Topology:
    """Baseline three-tier tree: origin, core switch, three aggregation
    switches (each co-hosting an edge cache), three access switches,
    consumers round-robin over access."""
    up = interior if interior is not None else params
    agg = [f"agg{i}" for i in range(3)]
    access = [f"access{i}" for i in range(3)]
    names = ["origin", "core"] + agg + access + [f"c{i}" for i in range(n_consumers)]
    hosts = {n: Host(world, n) for n in names}
    links: list[Link] = []
    _connect(links, world, hosts, "origin", "core", up)
    for i in range(3):
        _connect(links, world, hosts, "core", agg[i], up)
        _connect(links, world, hosts, agg[i], access[i], up)
    consumers = []
    for i in range(n_consumers):
        cname = f"c{i}"
        _connect(links, world, hosts, access[i % 3], cname, params)
        consumers.append(cname)
    return Topology(
        world=world,
        hosts=hosts,
        links=links,
        producer="origin",
        consumers=consumers,
        forwarders=["core"] + agg + access,
        cache_hosts=agg,
    )


def next_hop_faces(topo: Topology, dst_name: str) -> dict[str, int]:
    """BFS shortest-path next-hop face from every host toward dst."""
    dst = topo.hosts[dst_name]
    # BFS from dst outward, recording for each host which of its own links
    # leads one step back toward dst
    faces: dict[str, int] = {}
    visited = {dst.name}
    frontier = [dst]
    while frontier:
        nxt: list[Host] = []
        for node in frontier:
            for link in node.links:
                peer = link.other(node)
                if peer.name in visited:
                    continue
                visited.add(peer.name)
                faces[peer.name] = peer.face_of(link)
                nxt.append(peer)
        frontier = nxt
    return faces
