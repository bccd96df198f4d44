"""Forwarding-plane conformance tests.

The directed cases pin the interest/data pipeline: content store first,
then pending-interest aggregation with duplicate-nonce drops and
rate-limited same-face retransmission, then longest-prefix forwarding;
data consumes the pending entry, is cached everywhere, and fans out to
all waiting faces except the one it arrived on.
"""

import pytest

from pcstream.forwarding import ContentStore, Fib, Forwarder
from pcstream.naming import Name, segment_name, service_prefix, with_chunk
from pcstream.netsim import MS, SEC, Host, Link, SimWorld
from pcstream.wire import DataPacket, Interest, make_data_packets

WINDOW = "TimeWindow_20260818T120000"


def _chunk(gof=1, seg="30", c=0, ds="lab"):
    return with_chunk(segment_name(ds, WINDOW, gof, seg), c)


def _data(name, payload=100):
    return DataPacket(name=name, payload_len=payload, last_chunk=0)


def _fwd(**kw):
    f = Forwarder("fwd0", **kw)
    f.fib.add_route(service_prefix(), face=0)  # face 0 = upstream
    return f


UP = 0
C1, C2 = 1, 2


class TestInterestPath:
    def test_miss_forwards_upstream_and_creates_pit(self):
        f = _fwd()
        name = _chunk()
        actions = f.on_interest(0, C1, Interest(name, nonce=11))
        assert actions == [(UP, Interest(name, nonce=11))]
        assert f.counters.interests_out == 1
        assert name.components in f.pit

    def test_cs_hit_answers_directly(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=11))
        f.on_data(10, UP, _data(name))
        actions = f.on_interest(20, C2, Interest(name, nonce=22))
        assert actions == [(C2, _data(name))]
        assert f.counters.interests_out == 1  # nothing further upstream

    def test_aggregation_sends_one_upstream(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=11))
        actions = f.on_interest(5, C2, Interest(name, nonce=22))
        assert actions == []
        assert f.counters.interests_out == 1
        assert f.counters.aggregated == 1
        out = f.on_data(10, UP, _data(name))
        assert sorted(face for face, _ in out) == [C1, C2]

    def test_duplicate_nonce_dropped(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=11))
        assert f.on_interest(5, C2, Interest(name, nonce=11)) == []
        assert f.counters.dup_nonce_drops == 1
        # the duplicate's face is not recorded as a waiter
        out = f.on_data(10, UP, _data(name))
        assert [face for face, _ in out] == [C1]

    def test_same_face_retx_suppressed_then_released(self):
        f = _fwd(suppression_ns=60 * MS)
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=11))
        assert f.on_interest(30 * MS, C1, Interest(name, nonce=12)) == []
        assert f.counters.suppressed_retx == 1
        actions = f.on_interest(70 * MS, C1, Interest(name, nonce=13))
        assert actions == [(UP, Interest(name, nonce=13))]
        assert f.counters.interests_out == 2

    def test_no_route_drops(self):
        f = Forwarder("lone")
        assert f.on_interest(0, C1, Interest(_chunk(), nonce=1)) == []
        assert f.counters.no_route_drops == 1

    def test_pit_expiry_allows_fresh_fetch(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=1))
        late = 5 * SEC  # past the 4 s lifetime
        actions = f.on_interest(late, C1, Interest(name, nonce=2))
        assert actions == [(UP, Interest(name, nonce=2))]
        assert f.counters.pit_expired == 1


class TestDataPath:
    def test_unsolicited_data_dropped_uncached(self):
        f = _fwd()
        name = _chunk()
        assert f.on_data(0, UP, _data(name)) == []
        assert f.counters.unsolicited_data == 1
        assert len(f.cs) == 0

    def test_data_not_echoed_to_arrival_face(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=1))
        out = f.on_data(10, UP, _data(name))
        assert all(face != UP for face, _ in out)

    def test_data_cached_on_path(self):
        f = _fwd()
        name = _chunk()
        f.on_interest(0, C1, Interest(name, nonce=1))
        f.on_data(10, UP, _data(name))
        assert len(f.cs) == 1

    def test_sweep_purges_expired_entries(self):
        f = _fwd()
        f.on_interest(0, C1, Interest(_chunk(c=0), nonce=1))
        f.on_interest(0, C1, Interest(_chunk(c=1), nonce=2))
        assert f.sweep(1 * SEC) == 0
        assert f.sweep(10 * SEC) == 2
        assert f.pit == {}


class TestContentStore:
    def test_lru_eviction_order(self):
        cs = ContentStore(capacity=2)
        a, b, c = (_data(_chunk(c=i)) for i in range(3))
        cs.insert(a)
        cs.insert(b)
        assert cs.lookup(a.name) is a  # refresh a; b is now oldest
        cs.insert(c)
        assert cs.lookup(b.name) is None
        assert cs.lookup(a.name) is a
        assert cs.lookup(c.name) is c
        assert cs.counters.evictions == 1

    def test_capacity_zero_stores_nothing(self):
        cs = ContentStore(capacity=0)
        cs.insert(_data(_chunk()))
        assert len(cs) == 0

    def test_reinsert_does_not_duplicate(self):
        cs = ContentStore(capacity=4)
        d = _data(_chunk())
        cs.insert(d)
        cs.insert(d)
        assert len(cs) == 1


class TestFib:
    def test_longest_prefix_wins(self):
        fib = Fib()
        fib.add_route(service_prefix(), face=1)
        fib.add_route(service_prefix("lab"), face=2)
        assert fib.lookup(_chunk(ds="lab")) == 2
        assert fib.lookup(_chunk(ds="other")) == 1

    def test_no_match(self):
        fib = Fib()
        fib.add_route(service_prefix("lab"), face=1)
        assert fib.lookup(Name(components=("elsewhere",))) is None


class TestOnLinks:
    """End-to-end over real links: two consumers behind one forwarder."""

    def test_second_consumer_served_from_cache(self):
        w = SimWorld(seed=1)
        hosts = {n: Host(w, n) for n in ("producer", "fwd0", "c1", "c2")}
        links = [
            Link(w, hosts["fwd0"], hosts["producer"], 10**7, prop_ns=2 * MS),
            Link(w, hosts["fwd0"], hosts["c1"], 10**7, prop_ns=2 * MS),
            Link(w, hosts["fwd0"], hosts["c2"], 10**7, prop_ns=2 * MS),
        ]
        fwd = Forwarder("fwd0")
        fwd.fib.add_route(service_prefix(), face=0)
        hosts["fwd0"].handler = fwd.handler

        name = _chunk()
        store = {p.name.components: p for p in make_data_packets(name.components and segment_name("lab", WINDOW, 1, "30"), 100)}

        def producer_handler(now, face, pkt):
            return [(face, store[pkt.name.components])]

        hosts["producer"].handler = producer_handler

        got = {"c1": [], "c2": []}
        hosts["c1"].handler = lambda now, face, pkt: (got["c1"].append(now), [])[1]
        hosts["c2"].handler = lambda now, face, pkt: (got["c2"].append(now), [])[1]

        chunk0 = make_data_packets(segment_name("lab", WINDOW, 1, "30"), 100)[0].name
        hosts["c1"].send(0, Interest(chunk0, nonce=1))
        w.run(until_ns=1 * SEC)
        w.schedule(0, lambda: hosts["c2"].send(0, Interest(chunk0, nonce=2)))
        w.run(until_ns=2 * SEC)

        assert len(got["c1"]) == 1 and len(got["c2"]) == 1
        # first fetch crossed two hops; the second was answered at the edge
        assert fwd.cs.counters.hits == 1
        upstream_stats = links[0].stats(hosts["fwd0"])
        assert upstream_stats.sent == 1  # one interest ever went upstream
