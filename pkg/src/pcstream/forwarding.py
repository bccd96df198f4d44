"""Name-based forwarding plane.

A forwarder is a pure state machine over three tables: a content store
(exact-name LRU of Data packets), a pending-interest table aggregating
same-name requests from different faces, and a FIB matched by longest
name prefix.  ``on_interest``/``on_data`` return (face, packet) actions
for the host adapter to transmit, which keeps the logic independently
testable without a clock or links.

Interest handling order: content store first, then the PIT (duplicate
nonces dropped, same-face retransmissions forwarded upstream again only
after a suppression interval, new faces aggregated), then a FIB lookup
to send upstream.  Data handling: no PIT entry means unsolicited (drop);
otherwise cache everywhere, consume the entry, and fan out downstream.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .naming import Name
from .wire import INTEREST_LIFETIME_NS, DataPacket, Interest

CS_CAPACITY = 65536  # packets
PIT_LIFETIME_NS = INTEREST_LIFETIME_NS
# a same-face retransmission is sent upstream again at most this often;
# kept well under the consumers' minimum retry timeout so a lost Data can
# be recovered before the pending entry expires
SUPPRESSION_INTERVAL_NS = 60_000_000

Action = tuple[int, object]  # (face_id, packet)


@dataclass
class CsCounters:
    hits: int = 0
    misses: int = 0
    insertions: int = 0
    evictions: int = 0


class ContentStore:
    """Exact-name LRU over Data packets."""

    def __init__(self, capacity: int = CS_CAPACITY):
        if capacity < 0:
            raise ValueError(f"negative capacity: {capacity}")
        self.capacity = capacity
        self._store: OrderedDict[tuple[str, ...], DataPacket] = OrderedDict()
        self.counters = CsCounters()

    def __len__(self) -> int:
        return len(self._store)

    def lookup(self, name: Name) -> DataPacket | None:
        key = name.components
        pkt = self._store.get(key)
        if pkt is None:
            self.counters.misses += 1
            return None
        self._store.move_to_end(key)
        self.counters.hits += 1
        return pkt

    def insert(self, data: DataPacket) -> None:
        if self.capacity == 0:
            return
        key = data.name.components
        if key in self._store:
            self._store.move_to_end(key)
            return
        if len(self._store) >= self.capacity:
            self._store.popitem(last=False)
            self.counters.evictions += 1
        self._store[key] = data
        self.counters.insertions += 1


@dataclass
class PitEntry:
    expiry: int
    upstream_face: int
    last_upstream_send: int
    in_faces: dict[int, int] = field(default_factory=dict)  # face -> latest nonce
    nonces: set[int] = field(default_factory=set)


class Fib:
    """Longest-prefix match over name components."""

    def __init__(self) -> None:
        self._routes: dict[tuple[str, ...], int] = {}

    def add_route(self, prefix: Name, face: int) -> None:
        self._routes[prefix.components] = face

    def lookup(self, name: Name) -> int | None:
        comps = name.components
        for k in range(len(comps), 0, -1):
            face = self._routes.get(comps[:k])
            if face is not None:
                return face
        return self._routes.get(())

    def __len__(self) -> int:
        return len(self._routes)


@dataclass
class ForwarderCounters:
    interests_in: int = 0
    data_in: int = 0
    interests_out: int = 0
    data_out: int = 0
    dup_nonce_drops: int = 0
    no_route_drops: int = 0
    unsolicited_data: int = 0
    suppressed_retx: int = 0
    aggregated: int = 0
    pit_expired: int = 0


class Forwarder:
    """One node's forwarding state machine."""

    def __init__(
        self,
        name: str,
        cs_capacity: int = CS_CAPACITY,
        pit_lifetime_ns: int = PIT_LIFETIME_NS,
        suppression_ns: int = SUPPRESSION_INTERVAL_NS,
    ):
        self.name = name
        self.cs = ContentStore(cs_capacity)
        self.pit: dict[tuple[str, ...], PitEntry] = {}
        self.fib = Fib()
        self.pit_lifetime_ns = pit_lifetime_ns
        self.suppression_ns = suppression_ns
        self.counters = ForwarderCounters()

    # -- interest path ------------------------------------------------------

    def on_interest(self, now: int, face: int, interest: Interest) -> list[Action]:
        self.counters.interests_in += 1

        cached = self.cs.lookup(interest.name)
        if cached is not None:
            self.counters.data_out += 1
            return [(face, cached)]

        key = interest.name.components
        entry = self.pit.get(key)
        if entry is not None and entry.expiry <= now:
            del self.pit[key]
            self.counters.pit_expired += 1
            entry = None

        if entry is not None:
            if interest.nonce in entry.nonces:
                self.counters.dup_nonce_drops += 1
                return []
            entry.nonces.add(interest.nonce)
            entry.expiry = now + self.pit_lifetime_ns
            if face in entry.in_faces:
                # same consumer asking again: the upstream copy or its Data
                # was probably lost, so re-forward, rate-limited
                entry.in_faces[face] = interest.nonce
                if now - entry.last_upstream_send >= self.suppression_ns:
                    entry.last_upstream_send = now
                    self.counters.interests_out += 1
                    return [(entry.upstream_face, interest)]
                self.counters.suppressed_retx += 1
                return []
            entry.in_faces[face] = interest.nonce
            self.counters.aggregated += 1
            return []

        upstream = self.fib.lookup(interest.name)
        if upstream is None:
            self.counters.no_route_drops += 1
            return []
        self.pit[key] = PitEntry(
            expiry=now + self.pit_lifetime_ns,
            upstream_face=upstream,
            last_upstream_send=now,
            in_faces={face: interest.nonce},
            nonces={interest.nonce},
        )
        self.counters.interests_out += 1
        return [(upstream, interest)]

    # -- data path ----------------------------------------------------------

    def on_data(self, now: int, face: int, data: DataPacket) -> list[Action]:
        self.counters.data_in += 1
        key = data.name.components
        entry = self.pit.pop(key, None)
        if entry is None or entry.expiry <= now:
            if entry is not None:
                self.counters.pit_expired += 1
            self.counters.unsolicited_data += 1
            return []
        self.cs.insert(data)
        out = [(f, data) for f in entry.in_faces if f != face]
        self.counters.data_out += len(out)
        return out

    # -- housekeeping -------------------------------------------------------

    def sweep(self, now: int) -> int:
        """Drop expired PIT entries; returns how many were removed."""
        dead = [k for k, e in self.pit.items() if e.expiry <= now]
        for k in dead:
            del self.pit[k]
        self.counters.pit_expired += len(dead)
        return len(dead)

    # -- host adapter -------------------------------------------------------

    def handler(self, now: int, face: int, packet: object) -> list[Action]:
        if isinstance(packet, Interest):
            return self.on_interest(now, face, packet)
        if isinstance(packet, DataPacket):
            return self.on_data(now, face, packet)
        raise TypeError(f"forwarder {self.name} got unknown packet {type(packet).__name__}")
