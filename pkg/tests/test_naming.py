"""Name grammar: exact formatting, round-trips, prefix matching."""

import pytest
from hypothesis import given, strategies as st

from pcstream.naming import (
    ContentId,
    Name,
    NameFormatError,
    METADATA,
    LAST_LAYER,
    TOP_LAYER,
    SEGMENT_LABELS,
    chunk_index,
    enumerate_gof_segments,
    format_name,
    is_prefix,
    metadata_name,
    parse_name,
    segment_name,
    top_layer_name,
    with_chunk,
)

WINDOW = "TimeWindow_20240314T120000"


def test_exact_name_strings():
    # Frozen expected strings for every name shape.
    base = f"/PointCloudService/DataSetID/{WINDOW}/GoF_0001"
    assert top_layer_name("DataSetID", WINDOW, 1).text == f"{base}/TopLayer"
    assert segment_name("DataSetID", WINDOW, 1, "30").text == f"{base}/LastLayer/30"
    assert (
        segment_name("DataSetID", WINDOW, 1, "enhanced30-50").text
        == f"{base}/LastLayer/enhanced30-50"
    )
    assert (
        segment_name("DataSetID", WINDOW, 1, "enhanced50-75").text
        == f"{base}/LastLayer/enhanced50-75"
    )
    assert (
        segment_name("DataSetID", WINDOW, 1, "enhanced75-100").text
        == f"{base}/LastLayer/enhanced75-100"
    )
    assert metadata_name("DataSetID").text == "/PointCloudService/DataSetID/MetaData"


def test_chunk_suffix():
    n = with_chunk(segment_name("ds", WINDOW, 12, "30"), 7)
    assert n.text.endswith("/GoF_0012/LastLayer/30/c=7")
    assert chunk_index(n) == 7
    assert chunk_index(segment_name("ds", WINDOW, 12, "30")) is None
    with pytest.raises(NameFormatError):
        with_chunk(n, 8)  # double chunking


def test_enumerate_gof_segments_order_and_count():
    names = enumerate_gof_segments("ds", WINDOW, 3)
    assert len(names) == 5
    assert names[0].components[-1] == TOP_LAYER
    assert [n.components[-1] for n in names[1:]] == list(SEGMENT_LABELS)
    # all share the GoF prefix
    prefix = Name(names[0].components[:4])
    assert all(is_prefix(prefix, n) for n in names)


def test_gof_range_and_window_validation():
    with pytest.raises(NameFormatError):
        top_layer_name("ds", WINDOW, 0)
    with pytest.raises(NameFormatError):
        top_layer_name("ds", WINDOW, 10000)
    with pytest.raises(NameFormatError):
        top_layer_name("ds", "TimeWindow_2024", 1)
    with pytest.raises(NameFormatError):
        top_layer_name("ds", "20240314T120000", 1)


def test_layer_segment_consistency():
    with pytest.raises(NameFormatError):
        format_name(ContentId("ds", WINDOW, 1, TOP_LAYER, segment="30"))
    with pytest.raises(NameFormatError):
        format_name(ContentId("ds", WINDOW, 1, LAST_LAYER, segment="55"))
    with pytest.raises(NameFormatError):
        format_name(ContentId("ds", WINDOW, 1, METADATA))  # window on metadata
    with pytest.raises(NameFormatError):
        format_name(ContentId("ds", layer=LAST_LAYER, segment="30"))


def test_parse_rejects_malformed():
    bad = [
        "PointCloudService/ds/MetaData",  # no leading slash
        "/OtherService/ds/MetaData",
        "/PointCloudService/ds",
        f"/PointCloudService/ds/{WINDOW}/GoF_1/TopLayer",  # not 4 digits
        f"/PointCloudService/ds/{WINDOW}/GoF_0001/LastLayer",  # missing segment
        f"/PointCloudService/ds/{WINDOW}/GoF_0001/LastLayer/30/c=1/c=2",
        f"/PointCloudService/ds/{WINDOW}/GoF_0001/MidLayer",
        "/PointCloudService/ds/MetaData/extra",
        "/PointCloudService/ds/c=3",
        f"/PointCloudService/ds/{WINDOW}/GoF_0001/LastLayer/30/c=01",
    ]
    for text in bad:
        with pytest.raises(NameFormatError):
            parse_name(text)


def test_is_prefix():
    service = Name(("PointCloudService",))
    ds = Name(("PointCloudService", "ds"))
    other = Name(("PointCloudService", "other"))
    n = segment_name("ds", WINDOW, 1, "30")
    assert is_prefix(service, n)
    assert is_prefix(ds, n)
    assert not is_prefix(other, n)
    assert is_prefix(n, n)
    assert not is_prefix(with_chunk(n, 0), n)


_datasets = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-",
    min_size=1,
    max_size=16,
).filter(lambda s: s not in ("MetaData", "TopLayer", "LastLayer", "PointCloudService"))


@given(
    dataset=_datasets,
    gof=st.integers(min_value=1, max_value=9999),
    segment=st.sampled_from(SEGMENT_LABELS),
    chunk=st.one_of(st.none(), st.integers(min_value=0, max_value=10**6)),
)
def test_roundtrip_last_layer(dataset, gof, segment, chunk):
    cid = ContentId(dataset, WINDOW, gof, LAST_LAYER, segment, chunk)
    assert parse_name(format_name(cid).text) == cid


@given(dataset=_datasets, chunk=st.one_of(st.none(), st.integers(min_value=0, max_value=99)))
def test_roundtrip_metadata(dataset, chunk):
    cid = ContentId(dataset=dataset, layer=METADATA, chunk=chunk)
    assert parse_name(format_name(cid).text) == cid
