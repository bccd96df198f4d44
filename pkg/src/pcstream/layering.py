"""Quality tiering of the leaf layer.

Leaves (in Morton order) are assigned to four tiers by the base-2 radical
inverse of their index: van der Corput values below 0.30 form the base
tier, then [0.30, 0.50), [0.50, 0.75) and [0.75, 1.0) form the
enhancement tiers.  Because the sequence is a low-discrepancy permutation,
every tier is spatially spread out and the cumulative unions are nested
subsets whose sizes track the tier ratios to within a couple of points.

Tier labels reuse the segment names of the content namespace so packets,
payloads and metrics all key on the same strings.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .codec import CodecError, VoxelCloud, morton_encode
from .naming import SEGMENT_LABELS

# upper radical-inverse bound of each tier, in ladder order
TIER_BOUNDS = (0.30, 0.50, 0.75, 1.00)
# cumulative point-share reached at each rung
CUMULATIVE_RATIOS = (0.30, 0.50, 0.75, 1.00)


class LayeringError(ValueError):
    """Raised for malformed segment payloads or inconsistent partitions."""


def radical_inverse(i: int) -> float:
    """Base-2 van der Corput value of a non-negative index."""
    if i < 0:
        raise LayeringError(f"index must be non-negative, got {i}")
    out = 0.0
    f = 0.5
    while i:
        out += f * (i & 1)
        i >>= 1
        f *= 0.5
    return out


def radical_inverse_array(n: int) -> np.ndarray:
    """Vectorized radical inverse for indices 0..n-1 (bit reversal)."""
    idx = np.arange(n, dtype=np.uint64)
    rev = np.zeros(n, dtype=np.uint64)
    nbits = max(int(n - 1).bit_length(), 1)
    for bit in range(nbits):
        rev |= ((idx >> np.uint64(bit)) & np.uint64(1)) << np.uint64(nbits - 1 - bit)
    return rev.astype(np.float64) / float(1 << nbits)


@dataclass(frozen=True)
class LayerPartition:
    """Disjoint tier index sets covering range(n), each sorted ascending."""

    n: int
    segments: dict[str, np.ndarray]

    def cumulative_indices(self, k: int) -> np.ndarray:
        """Sorted union of tiers 0..k (k indexes the ladder, 0..3)."""
        if not (0 <= k < len(SEGMENT_LABELS)):
            raise LayeringError(f"tier rung out of range 0..3: {k}")
        parts = [self.segments[label] for label in SEGMENT_LABELS[: k + 1]]
        return np.sort(np.concatenate(parts))

    def cumulative_sizes(self) -> tuple[int, ...]:
        sizes = []
        total = 0
        for label in SEGMENT_LABELS:
            total += len(self.segments[label])
            sizes.append(total)
        return tuple(sizes)


def check_ratios(ratios: tuple[float, ...]) -> tuple[float, ...]:
    """Validate a cumulative retention ladder: one bound per tier label,
    strictly increasing, ending at 1.0 so the tiers cover every leaf."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SEGMENT_LABELS):
        raise LayeringError(
            f"ladder needs {len(SEGMENT_LABELS)} ratios, got {len(ratios)}")
    if any(b <= a for a, b in zip((0.0,) + ratios, ratios)):
        raise LayeringError(f"ratios must be strictly increasing: {ratios}")
    if ratios[-1] != 1.0:
        raise LayeringError(f"last ratio must be 1.0, got {ratios[-1]}")
    return ratios


def partition_indices(n: int, ratios: tuple[float, ...] = TIER_BOUNDS) -> LayerPartition:
    """Tier assignment for n leaf indices by radical-inverse priority.

    Indices are ranked by their van der Corput value (most uniform prefix
    first) and cut at exact quotas, so every cumulative tier size lands
    within one point of ratio*n; a raw threshold on the values would drift
    by the sequence discrepancy, which grows with log n.
    """
    if n < 1:
        raise LayeringError(f"partition needs n >= 1, got {n}")
    order = np.argsort(radical_inverse_array(n), kind="stable")
    quotas = [math.ceil(r * n) for r in check_ratios(ratios)]
    segments = {}
    lo = 0
    for label, hi in zip(SEGMENT_LABELS, quotas):
        segments[label] = np.sort(order[lo:hi])
        lo = hi
    return LayerPartition(n=n, segments=segments)


def tier_subset(last: VoxelCloud, indices: np.ndarray) -> VoxelCloud:
    """Subcloud of a Morton-sorted leaf cloud at the given sorted indices."""
    coords = last.coords[indices]
    colors = last.colors[indices] if last.colors is not None else None
    return VoxelCloud(depth=last.depth, coords=coords, colors=colors, morton_order=True)


# ---------------------------------------------------------------------------
# Segment payloads
# ---------------------------------------------------------------------------
#
# A segment payload carries a Morton-ascending subcloud:
#   u32le point count | LEB128 varint deltas of the Morton codes | colors
# The first varint is the first code itself, later ones the (positive)
# difference to the previous code.  The color block is 3 bytes per point
# or absent.


def _encode_varints(vals: np.ndarray) -> bytes:
    v = vals.astype(np.uint64)
    nbytes = np.ones(len(v), dtype=np.int64)
    tmp = v >> np.uint64(7)
    while (tmp != 0).any():
        nbytes += tmp != 0
        tmp >>= np.uint64(7)
    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    pos = np.concatenate([[0], np.cumsum(nbytes)[:-1]])
    shifted = v.copy()
    for k in range(int(nbytes.max())):
        mask = nbytes > k
        byte = (shifted[mask] & np.uint64(0x7F)).astype(np.uint8)
        byte |= (nbytes[mask] > k + 1).astype(np.uint8) << 7
        out[pos[mask] + k] = byte
        shifted = shifted >> np.uint64(7)
    return out.tobytes()


def _decode_varints(buf: np.ndarray, count: int) -> tuple[np.ndarray, int]:
    ends = np.flatnonzero((buf & 0x80) == 0)
    if len(ends) < count:
        raise LayeringError(f"varint block ends after {len(ends)} of {count} values")
    ends = ends[:count]
    starts = np.concatenate([[0], ends[:-1] + 1])
    lens = ends - starts + 1
    if int(lens.max()) > 10:
        raise LayeringError("varint longer than 10 bytes")
    vals = np.zeros(count, dtype=np.uint64)
    for j in range(int(lens.max())):
        mask = lens > j
        chunk = buf[starts[mask] + j].astype(np.uint64) & np.uint64(0x7F)
        vals[mask] |= chunk << np.uint64(7 * j)
    return vals, int(ends[-1]) + 1


def segment_payload(sub: VoxelCloud) -> bytes:
    """Serialize a Morton-ascending subcloud to the segment wire payload."""
    codes = sub.codes()
    if len(codes) == 0:
        raise LayeringError("cannot serialize an empty segment")
    if len(codes) > 1 and not (codes[1:] > codes[:-1]).all():
        raise LayeringError("segment subcloud must be unique and Morton-sorted")
    deltas = np.empty(len(codes), dtype=np.uint64)
    deltas[0] = codes[0]
    deltas[1:] = codes[1:] - codes[:-1]
    out = struct.pack("<I", len(codes)) + _encode_varints(deltas)
    if sub.colors is not None:
        out += sub.colors.tobytes()
    return out


def decode_segment(buf: bytes, depth: int) -> VoxelCloud:
    """Parse a segment payload back to a subcloud at the given depth."""
    if len(buf) < 4:
        raise LayeringError("segment payload shorter than its count field")
    (count,) = struct.unpack_from("<I", buf, 0)
    if count == 0:
        raise LayeringError("segment payload declares zero points")
    arr = np.frombuffer(buf, dtype=np.uint8)[4:]
    deltas, consumed = _decode_varints(arr, count)
    if count > 1 and (deltas[1:] == 0).any():
        raise LayeringError("non-increasing Morton codes in segment payload")
    codes = np.cumsum(deltas, dtype=np.uint64)
    rest = len(arr) - consumed
    colors = None
    if rest:
        if rest != 3 * count:
            raise LayeringError(
                f"color block of {rest} bytes does not match {count} points"
            )
        colors = arr[consumed:].reshape(count, 3).copy()
    from .codec import morton_decode

    return VoxelCloud(depth=depth, coords=morton_decode(codes), colors=colors)


def split_segments(last: VoxelCloud,
                   ratios: tuple[float, ...] = TIER_BOUNDS) -> dict[str, bytes]:
    """Partition a leaf cloud into the four tier payloads, keyed by label."""
    part = partition_indices(len(last), ratios)
    return {
        label: segment_payload(tier_subset(last, part.segments[label]))
        for label in SEGMENT_LABELS
    }


def reassemble(parts: list[VoxelCloud]) -> VoxelCloud:
    """Merge subclouds back into one Morton-sorted unique cloud."""
    if not parts:
        raise LayeringError("nothing to reassemble")
    depth = parts[0].depth
    if any(p.depth != depth for p in parts):
        raise LayeringError("reassemble needs equal depths")
    coords = np.concatenate([p.coords for p in parts])
    codes = morton_encode(coords)
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    keep = np.ones(len(order), dtype=bool)
    keep[1:] = sorted_codes[1:] != sorted_codes[:-1]
    idx = order[keep]
    colors = None
    if all(p.colors is not None for p in parts):
        colors = np.concatenate([p.colors for p in parts])[idx]
    return VoxelCloud(depth=depth, coords=coords[idx], colors=colors, morton_order=True)


def reconstruct_level(last: VoxelCloud, k: int) -> VoxelCloud:
    """Cumulative tier-k subcloud (rungs 0..k merged), for quality tables."""
    part = partition_indices(len(last))
    return tier_subset(last, part.cumulative_indices(k))
