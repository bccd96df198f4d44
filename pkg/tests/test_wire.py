"""Framing and chunking tests."""

import pytest

from pcstream.naming import ContentId, chunk_index, format_name
from pcstream.wire import (
    HEADER_OVERHEAD,
    MTU_PAYLOAD,
    DataPacket,
    Interest,
    WireError,
    chunk_names,
    chunk_payload_sizes,
    make_data_packets,
)


def _seg_name():
    return format_name(
        ContentId(
            dataset="lab",
            time_window="TimeWindow_20260818T120000",
            gof=1,
            layer="LastLayer",
            segment="30",
        )
    )


class TestChunking:
    def test_exact_multiple(self):
        assert chunk_payload_sizes(2400, mtu=1200) == [1200, 1200]

    def test_remainder(self):
        assert chunk_payload_sizes(2500, mtu=1200) == [1200, 1200, 100]

    def test_below_mtu(self):
        assert chunk_payload_sizes(5, mtu=1200) == [5]

    def test_empty_segment_is_one_zero_chunk(self):
        assert chunk_payload_sizes(0) == [0]

    def test_rejects_bad_args(self):
        with pytest.raises(WireError):
            chunk_payload_sizes(-1)
        with pytest.raises(WireError):
            chunk_payload_sizes(10, mtu=0)


class TestPackets:
    def test_data_packets_enumerate_chunks(self):
        name = _seg_name()
        pkts = make_data_packets(name, 2500, mtu=1200)
        assert [p.payload_len for p in pkts] == [1200, 1200, 100]
        assert [chunk_index(p.name) for p in pkts] == [0, 1, 2]
        assert all(p.last_chunk == 2 for p in pkts)
        assert all(p.name.components[:-1] == name.components for p in pkts)

    def test_wire_size_arithmetic(self):
        name = _seg_name()
        (pkt,) = make_data_packets(name, 100, mtu=1200)
        assert pkt.wire_size() == HEADER_OVERHEAD + len(pkt.name.text) + 100
        interest = Interest(name=pkt.name, nonce=7)
        assert interest.wire_size() == HEADER_OVERHEAD + len(pkt.name.text)

    def test_chunk_names_match_packets(self):
        name = _seg_name()
        assert chunk_names(name, 2500) == [p.name for p in make_data_packets(name, 2500)]

    def test_rejects_double_chunking(self):
        name = _seg_name()
        chunked = make_data_packets(name, 10)[0].name
        with pytest.raises(WireError):
            make_data_packets(chunked, 10)
        with pytest.raises(WireError):
            chunk_names(chunked, 10)

    def test_default_mtu(self):
        name = _seg_name()
        pkts = make_data_packets(name, MTU_PAYLOAD + 1)
        assert [p.payload_len for p in pkts] == [MTU_PAYLOAD, 1]
