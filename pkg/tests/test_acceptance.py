"""Acceptance suite: the ten headline invariants and trends at full scale.

Each test states one release criterion; run with -v to get a one-line
verdict per criterion.  Criteria 6-8 share a single default-grid sweep
(module fixture), which dominates the runtime: budget several minutes
on one core.  Everything else finishes in seconds.
"""

import dataclasses
import os
from collections import Counter

import numpy as np
import pytest

from pcstream.codec import (
    build_octree,
    coverage_quality,
    decode_frame,
    decode_octree,
    decode_top_layer,
    encode_frame,
    gen_synthetic,
    last_layer_bytes,
    split_layers,
    top_layer_bytes,
    voxelize,
)
from pcstream.forwarding import CS_CAPACITY, ContentStore, Forwarder
from pcstream.layering import (
    TIER_BOUNDS,
    decode_segment,
    partition_indices,
    reassemble,
    split_segments,
    tier_subset,
)
from pcstream.metrics import write_raw_csv
from pcstream.naming import SEGMENT_LABELS, TOP_LAYER, segment_name, service_prefix
from pcstream.netsim import MS, SEC, Host, Link, SimWorld
from pcstream.scenario import (
    ScenarioConfig,
    SyntheticSpec,
    build_synthetic_store,
    run_scenario,
)
from pcstream.sweep import (
    DEFAULT_BANDWIDTHS,
    DEFAULT_LOSSES,
    SweepGrid,
    default_base,
    grid_configs,
    run_one,
    run_sweep,
)
from pcstream.metrics import aggregate_rows
from pcstream.wire import Interest, make_data_packets

DEPTH = 7
WINDOW = "TimeWindow_19700101T000000"
SHAPES = ("sphere_shell", "cube_shell", "random_uniform")


def _random_cloud(rng, shape):
    # desk-scale band: 20k..100k raw points per cloud
    n = int(rng.integers(20_000, 100_001))
    return voxelize(gen_synthetic(shape, n, seed=int(rng.integers(2**31))), DEPTH)


# -- 1. codec ---------------------------------------------------------------


def test_01_codec_roundtrip_and_byte_partition():
    """decode(build(voxelize(cloud))) is set-exact; top/last bytes partition."""
    rng = np.random.default_rng(101)
    for i in range(100):
        vc = _random_cloud(rng, SHAPES[i % 3])
        frame = build_octree(vc)
        back = decode_octree(frame, DEPTH)
        assert np.array_equal(back.codes(), vc.codes())

        top, last = top_layer_bytes(frame), last_layer_bytes(frame)
        leaf = frame.level_bytes[-1]
        assert last[4:4 + len(leaf)] == leaf  # leaf stream embedded verbatim
        assert len(top) + len(last) == len(encode_frame(frame))  # exact tiling
        parents = decode_top_layer(top)
        assert parents.depth == DEPTH - 1
        assert np.array_equal(parents.codes(), decode_octree(frame, DEPTH - 1).codes())
        # one child-mask byte per deepest parent: the split loses nothing
        assert len(leaf) == len(parents)
        assert sum(map(len, frame.level_bytes)) == frame.total_occupancy_bytes()
        if i % 10 == 0:
            refit = decode_frame(encode_frame(frame))
            assert refit.level_bytes == frame.level_bytes


# -- 2. layer partition -----------------------------------------------------


def test_02_partition_cover_and_l50_reassembly():
    """Tiers disjointly cover 1..n, sizes track the ratios, L50 is bit-exact."""
    rng = np.random.default_rng(202)
    sizes = list(range(1, 1001)) + [int(rng.integers(10_001, 3_000_000)) for _ in range(8)]
    for n in sizes:
        part = partition_indices(n)
        allidx = np.concatenate([part.segments[lab] for lab in SEGMENT_LABELS])
        assert len(allidx) == n
        assert np.array_equal(np.sort(allidx), np.arange(n))
        for ratio, csize in zip(TIER_BOUNDS, part.cumulative_sizes()):
            assert abs(csize - ratio * n) <= 2, (n, ratio, csize)

    for i in range(10):
        vc = _random_cloud(rng, SHAPES[i % 3])
        _, last = split_layers(build_octree(vc))
        part = partition_indices(len(last))
        segs = split_segments(last)
        l50 = reassemble([
            decode_segment(segs["30"], DEPTH),
            decode_segment(segs["enhanced30-50"], DEPTH),
        ])
        want = tier_subset(last, part.cumulative_indices(1))
        assert np.array_equal(l50.coords, want.coords)
        if want.colors is not None:
            assert np.array_equal(l50.colors, want.colors)


# -- 3. quality ladder ------------------------------------------------------


def test_03_geometry_psnr_monotone_across_levels():
    """Coverage PSNR strictly climbs /30 -> /50 -> /75 -> /100 (exact)."""
    rng = np.random.default_rng(303)
    for i in range(10):
        vc = _random_cloud(rng, SHAPES[i % 3])
        _, last = split_layers(build_octree(vc))
        part = partition_indices(len(last))
        vals = [
            coverage_quality(vc, tier_subset(last, part.cumulative_indices(k))).psnr_db
            for k in range(4)
        ]
        assert vals[0] < vals[1] < vals[2] < vals[3], vals
        assert vals[3] == float("inf")  # full set reconstructs exactly


# -- 4. forwarding plane ----------------------------------------------------


def _star(n_consumers, seed=4):
    """fwd0 between one producer and n consumers; face 0 points upstream."""
    w = SimWorld(seed=seed)
    hosts = {"producer": Host(w, "producer"), "fwd0": Host(w, "fwd0")}
    links = [Link(w, hosts["fwd0"], hosts["producer"], 10**7, prop_ns=2 * MS)]
    for i in range(n_consumers):
        cname = f"c{i}"
        hosts[cname] = Host(w, cname)
        links.append(Link(w, hosts["fwd0"], hosts[cname], 10**7, prop_ns=2 * MS))
    fwd = Forwarder("fwd0")
    fwd.fib.add_route(service_prefix(), face=0)
    hosts["fwd0"].handler = fwd.handler

    served = Counter()
    packets = {}

    def producer_handler(now, face, pkt):
        served[pkt.name.components] += 1
        return [(face, packets[pkt.name.components])]

    hosts["producer"].handler = producer_handler

    got = {f"c{i}": [] for i in range(n_consumers)}
    for i in range(n_consumers):
        cname = f"c{i}"
        hosts[cname].handler = (
            lambda now, face, pkt, _b=got[cname]: (_b.append(pkt), [])[1]
        )
    return w, hosts, links, fwd, served, packets, got


def _publish(packets, gof, label, total_len):
    chunks = make_data_packets(segment_name("acc", WINDOW, gof, label), total_len)
    for p in chunks:
        packets[p.name.components] = p
    return [p.name for p in chunks]


def test_04_interest_aggregation_and_cache_hits():
    """One upstream Interest per name under aggregation, full and partial hits."""
    # a) five simultaneous requesters collapse to a single upstream Interest
    w, hosts, links, fwd, served, packets, got = _star(5)
    names = _publish(packets, 1, "30", 600)
    for i in range(5):
        hosts[f"c{i}"].send(0, Interest(names[0], nonce=100 + i))
    w.run(until_ns=1 * SEC)
    assert all(len(v) == 1 for v in got.values())
    assert links[0].stats(hosts["fwd0"]).sent == 1
    assert served[names[0].components] == 1

    # b) full hit: a later consumer is served entirely from the edge store
    w, hosts, links, fwd, served, packets, got = _star(2)
    names = _publish(packets, 1, "30", 600)
    hosts["c0"].send(0, Interest(names[0], nonce=1))
    w.run(until_ns=1 * SEC)
    w.schedule(0, lambda: hosts["c1"].send(0, Interest(names[0], nonce=2)))
    w.run(until_ns=2 * SEC)
    assert len(got["c0"]) == 1 and len(got["c1"]) == 1
    assert fwd.cs.counters.hits == 1
    assert links[0].stats(hosts["fwd0"]).sent == 1

    # c) partial hit: only the enhancement names travel upstream
    w, hosts, links, fwd, served, packets, got = _star(2)
    base_names = _publish(packets, 2, "30", 3 * 1200)
    enh_names = _publish(packets, 2, "enhanced30-50", 2 * 1200)
    for k, nm in enumerate(base_names):
        hosts["c0"].send(0, Interest(nm, nonce=10 + k))
    w.run(until_ns=1 * SEC)

    def second_wave():
        for k, nm in enumerate(base_names + enh_names):
            hosts["c1"].send(0, Interest(nm, nonce=20 + k))

    w.schedule(0, second_wave)
    w.run(until_ns=2 * SEC)
    assert len(got["c1"]) == len(base_names) + len(enh_names)
    assert links[0].stats(hosts["fwd0"]).sent == len(base_names) + len(enh_names)
    for nm in base_names + enh_names:
        assert served[nm.components] == 1, nm
    assert fwd.cs.counters.hits == len(base_names)


def test_04b_shared_forwarder_deduplicates_full_runs():
    """Five co-started consumers: each chunk name crosses upstream once."""
    spec = SyntheticSpec(n_points=20_000, n_frames=20, gof_size=2, seed=9)
    cfg = ScenarioConfig(
        protocol="inds", synthetic=spec, topology="linear_debug",
        n_consumers=5, start_stagger_ms=0.0,
        bandwidth_mbps=50.0, loss_pct=0.0, seed=4,
    )
    upstream = Counter()

    def tr(now, sender, link, direction, pkt, outcome):
        if direction == "tx" and sender == "fwd0" and isinstance(pkt, Interest):
            upstream[pkt.name.components] += 1

    res = run_scenario(cfg, tracer=tr)
    assert upstream, "no interests went upstream at all"
    assert max(upstream.values()) == 1
    for c in res.consumers:
        assert all(r.completed_at is not None for r in c.records)


# -- 5. adaptation ----------------------------------------------------------

# sized so the cumulative rungs straddle the three access budgets:
# R(/50) > 8 Mb, R(/75) <= 40 Mb < R(/100) <= 64 Mb per GoF
ADAPTIVE_SPEC = SyntheticSpec(n_points=90_000, n_frames=300, gof_size=30, seed=11)

EXPECTED_SETS = {
    10.0: (TOP_LAYER, "30"),
    50.0: (TOP_LAYER, "30", "enhanced30-50", "enhanced50-75"),
    80.0: (TOP_LAYER, "30", "enhanced30-50", "enhanced50-75", "enhanced75-100"),
}


def test_05_level_selection_tracks_bandwidth():
    """Steady-state tier sets match the link budget; delivery count climbs."""
    store = build_synthetic_store(ADAPTIVE_SPEC)
    delivered = []
    for bw, want in sorted(EXPECTED_SETS.items()):
        cfg = ScenarioConfig(
            protocol="inds", synthetic=ADAPTIVE_SPEC, topology="linear_debug",
            n_consumers=1, bandwidth_mbps=bw, loss_pct=0.0, seed=1,
        )
        res = run_scenario(cfg, store=store)
        recs = res.consumers[0].records
        assert len(recs) == 10
        steady = {tuple(r.levels) for r in recs[2:]}  # first two warm the estimator
        assert steady == {want}, (bw, steady)
        delivered.append(res.consumers[0].counters.data_received)
    assert delivered[0] < delivered[1] < delivered[2], delivered


# -- 6-8. sweep trends ------------------------------------------------------


@pytest.fixture(scope="module")
def sweep_table():
    """One full default-grid sweep; the trend criteria read from this table."""
    rows = run_sweep(grid_configs(SweepGrid(), default_base()), jobs=os.cpu_count())
    bad = [r["scenario_id"] for r in rows if r["status"] != "ok"]
    assert not bad, f"failed sweep runs: {bad[:5]}"
    table = {}
    for r in aggregate_rows(rows):
        table[(r["protocol"], float(r["bandwidth_mbps"]), float(r["loss_pct"]))] = r
    return rows, table


def _mean(table, proto, bw, loss, metric):
    return float(table[(proto, bw, loss)][f"{metric}_mean"])


def test_06_cache_hit_rate_dominates_everywhere(sweep_table):
    """Hit rate >= 0.65 and >= each baseline + 15pp at every grid point."""
    _, table = sweep_table
    for bw in DEFAULT_BANDWIDTHS:
        for loss in DEFAULT_LOSSES:
            ours = _mean(table, "inds", bw, loss, "cache_hit_rate")
            assert ours >= 0.65, (bw, loss, ours)
            for proto in ("dash_pc", "pcc_dash"):
                other = _mean(table, proto, bw, loss, "cache_hit_rate")
                assert ours - other >= 0.15, (bw, loss, proto, ours, other)


def test_07_delay_stays_flat_under_loss(sweep_table):
    """At 10 Mbps and 1% loss: our delay <= 1.5x baseline-free, DASH >= 3x."""
    _, table = sweep_table
    ratios = {}
    for proto in ("inds", "dash_pc", "pcc_dash"):
        clean = _mean(table, proto, 10.0, 0.0, "mean_gof_delay_ms")
        lossy = _mean(table, proto, 10.0, 1.0, "mean_gof_delay_ms")
        ratios[proto] = lossy / clean
    assert ratios["inds"] <= 1.5, ratios
    assert ratios["dash_pc"] >= 3.0, ratios
    assert ratios["pcc_dash"] >= 3.0, ratios


def test_08_throughput_retention_under_loss(sweep_table):
    """We keep >= 85% goodput at 1% loss; DASH at 10 Mbps drops below 70%."""
    _, table = sweep_table
    for bw in DEFAULT_BANDWIDTHS:
        clean = _mean(table, "inds", bw, 0.0, "effective_throughput_mbps")
        lossy = _mean(table, "inds", bw, 1.0, "effective_throughput_mbps")
        assert lossy >= 0.85 * clean, (bw, lossy / clean)
    for proto in ("dash_pc", "pcc_dash"):
        clean = _mean(table, proto, 10.0, 0.0, "effective_throughput_mbps")
        for loss in (0.7, 0.8, 0.9, 1.0):
            lossy = _mean(table, proto, 10.0, loss, "effective_throughput_mbps")
            assert lossy <= 0.70 * clean, (proto, loss, lossy / clean)


# -- 9. determinism ---------------------------------------------------------


def test_09_determinism_and_empirical_loss(sweep_table, tmp_path):
    """Same config+seed is byte-identical; observed loss within 15% of dialed."""
    cfg = dataclasses.replace(default_base(), bandwidth_mbps=50.0,
                              loss_pct=1.0, seed=2)
    row_a, row_b = run_one(cfg), run_one(cfg)
    assert row_a == row_b
    path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_raw_csv([row_a], path_a)
    write_raw_csv([row_b], path_b)
    assert path_a.read_bytes() == path_b.read_bytes()

    rows, _ = sweep_table
    eligible = lost = 0
    for r in rows:
        if float(r["loss_pct"]) == 1.0:
            eligible += int(r["link_packets_sent"]) - int(r["link_packets_overflow"])
            lost += int(r["link_packets_lost"])
    assert eligible >= 100_000
    rate = lost / eligible
    assert abs(rate - 0.01) / 0.01 <= 0.15, rate


# -- 10. store bound --------------------------------------------------------


def test_10_content_store_capacity_and_lru_eviction():
    """Hard 65,536-packet cap; least-recently-used entry is the victim."""
    assert CS_CAPACITY == 65536
    cs = ContentStore()
    for gof in range(1, 701):
        for pkt in make_data_packets(segment_name("lru", WINDOW, gof, "30"),
                                     100 * 1200):
            cs.insert(pkt)
        assert len(cs) <= CS_CAPACITY
    assert len(cs) == CS_CAPACITY

    small = ContentStore(capacity=2)
    pkt_a, pkt_b, pkt_c = make_data_packets(
        segment_name("lru2", WINDOW, 1, "30"), 3 * 1200)
    small.insert(pkt_a)
    small.insert(pkt_b)
    assert small.lookup(pkt_a.name) is not None  # refresh A
    small.insert(pkt_c)
    assert small.lookup(pkt_b.name) is None  # B was least recent
    assert small.lookup(pkt_a.name) is not None
    assert small.lookup(pkt_c.name) is not None
