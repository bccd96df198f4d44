"""Tier partition and segment payload tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcstream.codec import VoxelCloud, gen_synthetic, voxelize
from pcstream.layering import (
    CUMULATIVE_RATIOS,
    LayeringError,
    decode_segment,
    partition_indices,
    radical_inverse,
    radical_inverse_array,
    reassemble,
    reconstruct_level,
    segment_payload,
    split_segments,
    tier_subset,
)
from pcstream.naming import SEGMENT_LABELS


class TestRadicalInverse:
    def test_hand_table(self):
        # bit-reversal of the binary expansion: 1 -> 0.5, 2 -> 0.25,
        # 3 -> 0.75, 4 -> 0.125, 5 -> 0.625, 6 -> 0.375, 7 -> 0.875
        expected = [0.0, 0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875]
        assert [radical_inverse(i) for i in range(8)] == expected

    @given(st.integers(1, 5000))
    @settings(max_examples=60, deadline=None)
    def test_array_matches_scalar(self, n):
        arr = radical_inverse_array(n)
        scalars = np.array([radical_inverse(i) for i in range(n)])
        # same vdC sequence up to quantization at the array's bit width
        assert np.allclose(arr, scalars, atol=0.0)

    def test_rejects_negative(self):
        with pytest.raises(LayeringError):
            radical_inverse(-1)


class TestPartition:
    def test_n8_hand_example(self):
        part = partition_indices(8)
        assert part.segments["30"].tolist() == [0, 2, 4]
        assert part.segments["enhanced30-50"].tolist() == [6]
        assert part.segments["enhanced50-75"].tolist() == [1, 5]
        assert part.segments["enhanced75-100"].tolist() == [3, 7]
        assert part.cumulative_sizes() == (3, 4, 6, 8)

    def test_disjoint_cover(self):
        part = partition_indices(1000)
        all_idx = np.concatenate([part.segments[s] for s in SEGMENT_LABELS])
        assert len(all_idx) == 1000
        assert sorted(all_idx.tolist()) == list(range(1000))

    def test_cumulative_sizes_track_ratios(self):
        n = 10000
        part = partition_indices(n)
        for size, ratio in zip(part.cumulative_sizes(), CUMULATIVE_RATIOS):
            assert abs(size - ratio * n) <= 2, (size, ratio)

    def test_cumulative_nesting(self):
        part = partition_indices(777)
        prev = set()
        for k in range(4):
            cur = set(part.cumulative_indices(k).tolist())
            assert prev <= cur
            prev = cur
        assert prev == set(range(777))

    @given(st.integers(16, 4000))
    @settings(max_examples=60, deadline=None)
    def test_base_tier_spreads_out(self, n):
        # low-discrepancy ordering: the base tier never leaves a long run
        # of consecutive leaves uncovered
        base = partition_indices(n).segments["30"]
        padded = np.concatenate([[-1], base, [n]])
        assert int(np.diff(padded).max()) <= 7

    def test_rejects_empty(self):
        with pytest.raises(LayeringError):
            partition_indices(0)


class TestSegmentPayload:
    def _leaves(self, n=3000, depth=6, seed=13):
        return voxelize(gen_synthetic("sphere_shell", n, seed=seed), depth)

    def test_roundtrip_with_colors(self):
        last = self._leaves()
        part = partition_indices(len(last))
        for label in SEGMENT_LABELS:
            sub = tier_subset(last, part.segments[label])
            out = decode_segment(segment_payload(sub), last.depth)
            assert (out.coords == sub.coords).all()
            assert (out.colors == sub.colors).all()

    def test_roundtrip_without_colors(self):
        vc = VoxelCloud(depth=4, coords=np.array([[0, 0, 0], [3, 7, 1], [15, 15, 15]], np.uint32))
        out = decode_segment(segment_payload(vc), 4)
        assert (out.coords == vc.coords).all()
        assert out.colors is None

    @given(
        st.lists(
            st.tuples(st.integers(0, 127), st.integers(0, 127), st.integers(0, 127)),
            min_size=1,
            max_size=60,
            unique=True,
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_roundtrip_property(self, cells):
        from pcstream.codec import morton_encode

        coords = np.array(cells, dtype=np.uint32)
        order = np.argsort(morton_encode(coords), kind="stable")
        vc = VoxelCloud(depth=7, coords=coords[order])
        out = decode_segment(segment_payload(vc), 7)
        assert (out.coords == vc.coords).all()

    def test_rejects_unsorted(self):
        vc = VoxelCloud(depth=3, coords=np.array([[7, 7, 7], [0, 0, 0]], np.uint32))
        with pytest.raises(LayeringError):
            segment_payload(vc)

    def test_rejects_truncated_and_torn(self):
        last = self._leaves(n=200, depth=5)
        buf = segment_payload(last)
        with pytest.raises(LayeringError):
            decode_segment(buf[:3], 5)
        with pytest.raises(LayeringError):
            decode_segment(buf[:-1], 5)  # torn color block

    def test_split_segments_merge_back_exactly(self):
        last = self._leaves()
        payloads = split_segments(last)
        assert set(payloads) == set(SEGMENT_LABELS)
        parts = [decode_segment(payloads[s], last.depth) for s in SEGMENT_LABELS]
        merged = reassemble(parts)
        assert (merged.coords == last.coords).all()
        assert (merged.colors == last.colors).all()

    def test_reconstruct_level_sizes(self):
        last = self._leaves()
        n = len(last)
        for k, ratio in enumerate(CUMULATIVE_RATIOS):
            sub = reconstruct_level(last, k)
            assert abs(len(sub) - ratio * n) <= 2
