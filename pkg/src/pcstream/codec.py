"""Octree point-cloud codec.

A raw cloud is quantized onto a ``2^depth`` cubic grid, deduplicated, and
kept in Morton (Z-order) as the canonical serialization order.  The octree
is stored breadth-first as one occupancy byte per internal node: bit ``k``
of a node's byte says child ``k`` is occupied, with ``k = x | y<<1 | z<<2``
taken from the child cell's coordinate bits at that level.

The encoded-frame container is::

    magic "INDS" | version u8 | depth u8 | count u32le per level | occupancy | colors

where ``count[l]`` is the byte length of level ``l`` (levels run 0..depth-1,
level l describing the cells at depth l+1) and the color block holds the
per-leaf attribute bytes in Morton order.  Splitting the container after
level depth-2 gives the top layer (everything needed for the depth-1 coarse
cloud) and the last layer (leaf occupancy plus colors); the two parts tile
the container's byte budget exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

MAGIC = b"INDS"
CONTAINER_VERSION = 1
MAX_DEPTH = 21  # 3*21 = 63 bits, fits a uint64 Morton code


class CodecError(ValueError):
    """Raised for malformed inputs to the codec (encode or decode side)."""


class PlyFormatError(CodecError):
    """Raised when a PLY file cannot be parsed or lacks xyz geometry."""


# ---------------------------------------------------------------------------
# Morton (Z-order) codes
# ---------------------------------------------------------------------------

_M1 = np.uint64(0x1F00000000FFFF)
_M2 = np.uint64(0x1F0000FF0000FF)
_M3 = np.uint64(0x100F00F00F00F00F)
_M4 = np.uint64(0x10C30C30C30C30C3)
_M5 = np.uint64(0x1249249249249249)


def _split_by_3(a: np.ndarray) -> np.ndarray:
    x = a.astype(np.uint64) & np.uint64(0x1FFFFF)
    x = (x | x << np.uint64(32)) & _M1
    x = (x | x << np.uint64(16)) & _M2
    x = (x | x << np.uint64(8)) & _M3
    x = (x | x << np.uint64(4)) & _M4
    x = (x | x << np.uint64(2)) & _M5
    return x


def _compact_by_3(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) & _M5
    x = (x ^ (x >> np.uint64(2))) & _M4
    x = (x ^ (x >> np.uint64(4))) & _M3
    x = (x ^ (x >> np.uint64(8))) & _M2
    x = (x ^ (x >> np.uint64(16))) & _M1
    x = (x ^ (x >> np.uint64(32))) & np.uint64(0x1FFFFF)
    return x


def morton_encode(coords: np.ndarray) -> np.ndarray:
    """Interleave (N,3) integer coordinates into uint64 Z-order codes."""
    c = np.asarray(coords, dtype=np.uint64)
    return (
        _split_by_3(c[:, 0])
        | _split_by_3(c[:, 1]) << np.uint64(1)
        | _split_by_3(c[:, 2]) << np.uint64(2)
    )


def morton_decode(codes: np.ndarray) -> np.ndarray:
    """Inverse of morton_encode: uint64 codes back to (N,3) coordinates."""
    c = np.asarray(codes, dtype=np.uint64)
    out = np.empty((len(c), 3), dtype=np.uint32)
    out[:, 0] = _compact_by_3(c)
    out[:, 1] = _compact_by_3(c >> np.uint64(1))
    out[:, 2] = _compact_by_3(c >> np.uint64(2))
    return out


# ---------------------------------------------------------------------------
# Cloud types
# ---------------------------------------------------------------------------


@dataclass
class RawPointCloud:
    """Float positions straight from a file or generator, colors optional."""

    points: np.ndarray  # (N, 3) float64
    colors: np.ndarray | None = None  # (N, 3) uint8

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise CodecError(f"points must be (N, 3), got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise CodecError("points contain non-finite values")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8)
            if self.colors.shape != (len(self.points), 3):
                raise CodecError(
                    f"colors must be ({len(self.points)}, 3), got {self.colors.shape}"
                )

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class VoxelCloud:
    """Quantized cloud on the ``[0, 2^depth)`` grid, Morton-sorted and unique."""

    depth: int
    coords: np.ndarray  # (N, 3) uint32
    colors: np.ndarray | None = None  # (N, 3) uint8, rides with coords
    morton_order: bool = True

    def __post_init__(self) -> None:
        if not (0 <= self.depth <= MAX_DEPTH):
            raise CodecError(f"depth out of range 0..{MAX_DEPTH}: {self.depth}")
        self.coords = np.asarray(self.coords, dtype=np.uint32)
        if self.coords.ndim != 2 or self.coords.shape[1] != 3:
            raise CodecError(f"coords must be (N, 3), got {self.coords.shape}")
        side = 1 << self.depth
        if len(self.coords) and int(self.coords.max()) >= side:
            raise CodecError(f"coordinate {int(self.coords.max())} outside [0, {side})")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8)
            if self.colors.shape != (len(self.coords), 3):
                raise CodecError("colors shape does not match coords")

    def __len__(self) -> int:
        return len(self.coords)

    def codes(self) -> np.ndarray:
        return morton_encode(self.coords)


@dataclass
class OctreeFrame:
    """Breadth-first occupancy bytes, one list entry per level 0..depth-1."""

    depth: int
    level_bytes: list[bytes]
    leaf_count: int
    leaf_colors: np.ndarray | None = None  # (leaf_count, 3) uint8, Morton order

    def total_occupancy_bytes(self) -> int:
        return sum(len(b) for b in self.level_bytes)


@dataclass(frozen=True)
class GeometryQuality:
    """Geometry PSNR with its ingredients kept for reporting."""

    psnr_db: float
    peak: float
    mse: float


# ---------------------------------------------------------------------------
# Generators and loaders
# ---------------------------------------------------------------------------

_CUBE_CORNERS = np.array(
    [[(k >> 0) & 1, (k >> 1) & 1, (k >> 2) & 1] for k in range(8)], dtype=np.float64
)


def gen_synthetic(shape: str, n_points: int, seed: int) -> RawPointCloud:
    """Deterministic synthetic clouds inside the unit cube.

    Shapes: ``cube_shell`` (the 8 corners first, then points on the cube
    surface), ``sphere_shell`` (points on a sphere of radius 0.45 centred
    in the cube), ``random_uniform``.
    """
    if n_points < 1:
        raise CodecError(f"n_points must be positive, got {n_points}")
    rng = np.random.default_rng(seed)
    if shape == "cube_shell":
        if n_points <= 8:
            pts = _CUBE_CORNERS[:n_points].copy()
        else:
            extra = n_points - 8
            face_axis = rng.integers(0, 3, size=extra)
            face_side = rng.integers(0, 2, size=extra).astype(np.float64)
            uv = rng.random((extra, 2))
            pts = np.empty((extra, 3), dtype=np.float64)
            for axis in range(3):
                mask = face_axis == axis
                others = [a for a in range(3) if a != axis]
                pts[mask, axis] = face_side[mask]
                pts[mask, others[0]] = uv[mask, 0]
                pts[mask, others[1]] = uv[mask, 1]
            pts = np.vstack([_CUBE_CORNERS, pts])
    elif shape == "sphere_shell":
        v = rng.normal(size=(n_points, 3))
        norms = np.linalg.norm(v, axis=1)
        norms[norms == 0] = 1.0
        pts = 0.5 + 0.45 * v / norms[:, None]
    elif shape == "random_uniform":
        pts = rng.random((n_points, 3))
    else:
        raise CodecError(f"unknown synthetic shape: {shape!r}")
    colors = np.clip(np.floor(pts * 256.0), 0, 255).astype(np.uint8)
    return RawPointCloud(points=pts, colors=colors)


_PLY_DTYPES = {
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
    "uchar": "u1",
    "uint8": "u1",
    "char": "i1",
    "int8": "i1",
    "ushort": "<u2",
    "uint16": "<u2",
    "short": "<i2",
    "int16": "<i2",
    "uint": "<u4",
    "uint32": "<u4",
    "int": "<i4",
    "int32": "<i4",
}


def load_ply(path: str) -> RawPointCloud:
    """Load an ascii or binary_little_endian PLY vertex cloud.

    Only the vertex element is read; x/y/z are required, red/green/blue
    picked up when present, other properties skipped by stride.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if not data.startswith(b"ply"):
        raise PlyFormatError("not a PLY file: missing 'ply' magic")
    end = data.find(b"end_header\n")
    if end < 0:
        raise PlyFormatError("malformed header: no end_header line")
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()
    body = data[end + len(b"end_header\n"):]

    fmt = None
    elements: list[tuple[str, int]] = []
    props: dict[str, list[tuple[str, str]]] = {}
    current = None
    for lineno, line in enumerate(header_lines[1:], start=2):
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise PlyFormatError(f"unsupported format at header line {lineno}: {line!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3 or not tokens[2].isdigit():
                raise PlyFormatError(f"malformed element at header line {lineno}: {line!r}")
            current = tokens[1]
            elements.append((current, int(tokens[2])))
            props[current] = []
        elif tokens[0] == "property":
            if current is None:
                raise PlyFormatError(f"property before any element at line {lineno}: {line!r}")
            if tokens[1] == "list":
                props[current].append(("list", tokens[-1]))
            elif len(tokens) == 3:
                props[current].append((tokens[1], tokens[2]))
            else:
                raise PlyFormatError(f"malformed property at header line {lineno}: {line!r}")
    if fmt is None:
        raise PlyFormatError("malformed header: no format line")
    if not elements:
        raise PlyFormatError("malformed header: no element declarations")
    if elements[0][0] != "vertex":
        raise PlyFormatError(f"first element must be vertex, got {elements[0][0]!r}")
    n_vertices = elements[0][1]
    vertex_props = props["vertex"]
    prop_names = [name for _, name in vertex_props]
    for axis in ("x", "y", "z"):
        if axis not in prop_names:
            raise PlyFormatError(f"vertex element lacks required property {axis!r}")
    if any(t == "list" for t, _ in vertex_props):
        raise PlyFormatError("list properties on the vertex element are unsupported")

    color_names = ("red", "green", "blue")
    has_colors = all(c in prop_names for c in color_names)

    if fmt == "ascii":
        text = body.decode("ascii", errors="replace").splitlines()
        if len(text) < n_vertices:
            raise PlyFormatError(
                f"truncated body: {len(text)} rows for {n_vertices} declared vertices"
            )
        try:
            table = np.array(
                [row.split()[: len(vertex_props)] for row in text[:n_vertices]],
                dtype=np.float64,
            )
        except ValueError as exc:
            raise PlyFormatError(f"malformed ascii vertex row: {exc}") from exc
        if table.shape != (n_vertices, len(vertex_props)):
            raise PlyFormatError("ascii vertex rows have inconsistent column counts")
        cols = {name: table[:, i] for i, (_, name) in enumerate(vertex_props)}
    else:
        try:
            dtype = np.dtype([(name, _PLY_DTYPES[t]) for t, name in vertex_props])
        except KeyError as exc:
            raise PlyFormatError(f"unsupported property type: {exc}") from exc
        need = dtype.itemsize * n_vertices
        if len(body) < need:
            raise PlyFormatError(
                f"truncated body: {len(body)} bytes for {need} required by vertex element"
            )
        rec = np.frombuffer(body[:need], dtype=dtype)
        cols = {name: rec[name].astype(np.float64) for _, name in vertex_props}

    points = np.column_stack([cols["x"], cols["y"], cols["z"]])
    colors = None
    if has_colors:
        colors = np.column_stack([cols[c] for c in color_names])
        colors = np.clip(colors, 0, 255).astype(np.uint8)
    return RawPointCloud(points=points, colors=colors)


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------


def voxelize(cloud: RawPointCloud, depth: int) -> VoxelCloud:
    """Quantize to the ``[0, 2^depth)`` grid over the cloud's bounding box.

    Each axis is scaled independently; points landing in the same cell are
    merged with the first point's color winning.  The result is sorted by
    Morton code and deduplicated.
    """
    if len(cloud) == 0:
        raise CodecError("cannot voxelize an empty cloud")
    if not (1 <= depth <= MAX_DEPTH):
        raise CodecError(f"depth out of range 1..{MAX_DEPTH}: {depth}")
    side = 1 << depth
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    extent = hi - lo
    coords = np.zeros((len(cloud), 3), dtype=np.uint32)
    for axis in range(3):
        if extent[axis] > 0:
            scaled = (cloud.points[:, axis] - lo[axis]) / extent[axis] * side
            coords[:, axis] = np.minimum(scaled.astype(np.int64), side - 1).astype(np.uint32)

    codes = morton_encode(coords)
    order = np.argsort(codes, kind="stable")  # stable: ties keep input order
    sorted_codes = codes[order]
    keep = np.ones(len(sorted_codes), dtype=bool)
    keep[1:] = sorted_codes[1:] != sorted_codes[:-1]
    idx = order[keep]
    colors = cloud.colors[idx] if cloud.colors is not None else None
    return VoxelCloud(depth=depth, coords=coords[idx], colors=colors, morton_order=True)


# ---------------------------------------------------------------------------
# Octree build / decode
# ---------------------------------------------------------------------------


def build_octree(vc: VoxelCloud) -> OctreeFrame:
    """Serialize a voxel cloud to per-level occupancy bytes.

    Level ``l`` holds one byte per occupied node at depth ``l``, in Morton
    order of the node prefixes, so popcounts chain: the set bits of level l
    equal the node count of level l+1, and of the last level the leaf count.
    """
    if len(vc) == 0:
        raise CodecError("cannot build an octree from an empty voxel cloud")
    if vc.depth < 1:
        raise CodecError("octree needs depth >= 1")
    codes = vc.codes()
    if not vc.morton_order:
        order = np.argsort(codes, kind="stable")
        codes = codes[order]
    if len(codes) > 1 and not (codes[1:] > codes[:-1]).all():
        raise CodecError("voxel cloud must be unique and Morton-sorted")

    levels: list[bytes] = []
    for l in range(vc.depth):
        shift = np.uint64(3 * (vc.depth - l))
        parents = codes >> shift
        children = (codes >> np.uint64(3 * (vc.depth - l - 1))) & np.uint64(7)
        starts = np.flatnonzero(np.r_[True, parents[1:] != parents[:-1]])
        bits = np.left_shift(np.uint64(1), children)
        occ = np.bitwise_or.reduceat(bits, starts).astype(np.uint8)
        levels.append(occ.tobytes())

    colors = None
    if vc.colors is not None:
        colors = vc.colors if vc.morton_order else vc.colors[np.argsort(vc.codes(), kind="stable")]
    return OctreeFrame(
        depth=vc.depth, level_bytes=levels, leaf_count=len(codes), leaf_colors=colors
    )


def _expand_levels(level_bytes: list[bytes], n_levels: int) -> np.ndarray:
    """Walk occupancy bytes down ``n_levels`` levels, returning node codes."""
    nodes = np.zeros(1, dtype=np.uint64)
    for l in range(n_levels):
        occ = np.frombuffer(level_bytes[l], dtype=np.uint8)
        if len(occ) != len(nodes):
            raise CodecError(
                f"level {l} has {len(occ)} bytes but {len(nodes)} occupied nodes"
            )
        # k ascending within each node keeps global Morton order
        bitcols = (occ[:, None] >> np.arange(8, dtype=np.uint8)) & 1
        counts = bitcols.sum(axis=1).astype(np.int64)
        if (counts == 0).any():
            raise CodecError(f"level {l} contains a zero occupancy byte")
        parents = np.repeat(nodes, counts)
        ks = np.broadcast_to(np.arange(8, dtype=np.uint64), bitcols.shape)[bitcols.astype(bool)]
        nodes = (parents << np.uint64(3)) | ks
    return nodes


def decode_octree(frame: OctreeFrame, up_to_level: int) -> VoxelCloud:
    """Reconstruct the voxel cloud at a coarser depth.

    ``up_to_level`` = frame.depth reproduces the encoded cloud exactly
    (with colors); smaller values give the deduplicated Morton-truncated
    coarse cells at that depth.
    """
    if not (0 <= up_to_level <= frame.depth):
        raise CodecError(f"up_to_level out of range 0..{frame.depth}: {up_to_level}")
    if up_to_level == 0:
        return VoxelCloud(depth=0, coords=np.zeros((1, 3), dtype=np.uint32))
    nodes = _expand_levels(frame.level_bytes, up_to_level)
    colors = frame.leaf_colors if up_to_level == frame.depth else None
    return VoxelCloud(depth=up_to_level, coords=morton_decode(nodes), colors=colors)


# ---------------------------------------------------------------------------
# Container encode / decode and the layer split
# ---------------------------------------------------------------------------


def _header(depth: int, counts: list[int]) -> bytes:
    return MAGIC + struct.pack("<BB", CONTAINER_VERSION, depth) + struct.pack(
        f"<{len(counts)}I", *counts
    )


def encode_frame(frame: OctreeFrame) -> bytes:
    """Serialize to the container: header, occupancy levels, color block."""
    counts = [len(b) for b in frame.level_bytes]
    parts = [_header(frame.depth, counts)]
    parts.extend(frame.level_bytes)
    if frame.leaf_colors is not None:
        parts.append(frame.leaf_colors.tobytes())
    return b"".join(parts)


def decode_frame(buf: bytes) -> OctreeFrame:
    """Parse a container, validating magic, version and the popcount chain."""
    if len(buf) < 6 or buf[:4] != MAGIC:
        raise CodecError("bad container: missing INDS magic")
    version, depth = struct.unpack_from("<BB", buf, 4)
    if version != CONTAINER_VERSION:
        raise CodecError(f"unsupported container version: {version}")
    if not (1 <= depth <= MAX_DEPTH):
        raise CodecError(f"bad container depth: {depth}")
    off = 6
    if len(buf) < off + 4 * depth:
        raise CodecError("bad container: truncated level counts")
    counts = list(struct.unpack_from(f"<{depth}I", buf, off))
    off += 4 * depth
    levels = []
    for l, n in enumerate(counts):
        if len(buf) < off + n:
            raise CodecError(f"bad container: truncated occupancy at level {l}")
        levels.append(buf[off:off + n])
        off += n

    # validate the popcount chain and recover the leaf count
    expected = 1
    leaf_count = 0
    for l, blob in enumerate(levels):
        if len(blob) != expected:
            raise CodecError(
                f"level {l} has {len(blob)} bytes, expected {expected} from parent popcount"
            )
        arr = np.frombuffer(blob, dtype=np.uint8)
        if len(arr) and (arr == 0).any():
            raise CodecError(f"level {l} contains a zero occupancy byte")
        expected = int(np.unpackbits(arr).sum())
        if l == depth - 1:
            leaf_count = expected

    colors = None
    rest = len(buf) - off
    if rest:
        if leaf_count == 0 or rest % leaf_count:
            raise CodecError(
                f"color block of {rest} bytes does not divide over {leaf_count} leaves"
            )
        bpp = rest // leaf_count
        colors = np.frombuffer(buf[off:], dtype=np.uint8).reshape(leaf_count, bpp)
    return OctreeFrame(depth=depth, level_bytes=levels, leaf_count=leaf_count, leaf_colors=colors)


def top_layer_bytes(frame: OctreeFrame) -> bytes:
    """Header plus occupancy of levels 0..depth-2: the coarse-decodable part."""
    if frame.depth < 2:
        raise CodecError("layer split needs depth >= 2")
    counts = [len(b) for b in frame.level_bytes[:-1]]
    return _header(frame.depth, counts) + b"".join(frame.level_bytes[:-1])


def last_layer_bytes(frame: OctreeFrame) -> bytes:
    """Leaf-level count, occupancy and color block; tiles the container
    budget exactly: len(top) + len(last) == len(encode_frame(frame))."""
    if frame.depth < 2:
        raise CodecError("layer split needs depth >= 2")
    leaf = frame.level_bytes[-1]
    out = struct.pack("<I", len(leaf)) + leaf
    if frame.leaf_colors is not None:
        out += frame.leaf_colors.tobytes()
    return out


def split_layers(frame: OctreeFrame) -> tuple[bytes, VoxelCloud]:
    """Top-layer bytes plus the last layer as a full-resolution voxel cloud."""
    top = top_layer_bytes(frame)
    leaves = decode_octree(frame, frame.depth)
    return top, leaves


def decode_top_layer(buf: bytes) -> VoxelCloud:
    """Reconstruct the depth-1 coarse cloud from top-layer bytes alone."""
    if len(buf) < 6 or buf[:4] != MAGIC:
        raise CodecError("bad top layer: missing INDS magic")
    version, depth = struct.unpack_from("<BB", buf, 4)
    if version != CONTAINER_VERSION:
        raise CodecError(f"unsupported container version: {version}")
    if depth < 2:
        raise CodecError(f"bad top layer depth: {depth}")
    off = 6
    n_levels = depth - 1
    if len(buf) < off + 4 * n_levels:
        raise CodecError("bad top layer: truncated level counts")
    counts = struct.unpack_from(f"<{n_levels}I", buf, off)
    off += 4 * n_levels
    levels = []
    for l, n in enumerate(counts):
        if len(buf) < off + n:
            raise CodecError(f"bad top layer: truncated occupancy at level {l}")
        levels.append(buf[off:off + n])
        off += n
    nodes = _expand_levels(levels, n_levels)
    return VoxelCloud(depth=depth - 1, coords=morton_decode(nodes))


# ---------------------------------------------------------------------------
# Geometry quality
# ---------------------------------------------------------------------------


def _bbox_diagonal(coords: np.ndarray) -> float:
    lo = coords.min(axis=0).astype(np.float64)
    hi = coords.max(axis=0).astype(np.float64)
    return float(np.linalg.norm(hi - lo))


def geometry_psnr(reference: VoxelCloud, degraded: VoxelCloud) -> GeometryQuality:
    """Point-to-point geometry PSNR.

    mse is the mean squared distance from each degraded point to its
    nearest reference point; peak is the reference bounding-box diagonal.
    Identical geometry gives the +inf sentinel.
    """
    if len(reference) == 0 or len(degraded) == 0:
        raise CodecError("geometry_psnr needs two non-empty clouds")
    if reference.depth != degraded.depth:
        raise CodecError(
            f"depth mismatch: reference {reference.depth} vs degraded {degraded.depth}"
        )
    peak = _bbox_diagonal(reference.coords)
    dists, _ = cKDTree(reference.coords.astype(np.float64)).query(
        degraded.coords.astype(np.float64), k=1
    )
    mse = float(np.mean(np.square(dists)))
    if mse == 0.0:
        return GeometryQuality(psnr_db=math.inf, peak=peak, mse=mse)
    if peak == 0.0:
        return GeometryQuality(psnr_db=-math.inf, peak=peak, mse=mse)
    return GeometryQuality(psnr_db=10.0 * math.log10(peak * peak / mse), peak=peak, mse=mse)


def coverage_quality(full: VoxelCloud, subset: VoxelCloud) -> GeometryQuality:
    """How well a retained subset covers the full cloud.

    Distances run from every full-cloud point to its nearest subset point,
    with peak taken from the full cloud so the peak is stable across
    retention levels; on nested subsets this is monotone in subset size.
    """
    if len(full) == 0 or len(subset) == 0:
        raise CodecError("coverage_quality needs two non-empty clouds")
    if full.depth != subset.depth:
        raise CodecError(f"depth mismatch: full {full.depth} vs subset {subset.depth}")
    peak = _bbox_diagonal(full.coords)
    dists, _ = cKDTree(subset.coords.astype(np.float64)).query(
        full.coords.astype(np.float64), k=1
    )
    mse = float(np.mean(np.square(dists)))
    if mse == 0.0:
        return GeometryQuality(psnr_db=math.inf, peak=peak, mse=mse)
    if peak == 0.0:
        return GeometryQuality(psnr_db=-math.inf, peak=peak, mse=mse)
    return GeometryQuality(psnr_db=10.0 * math.log10(peak * peak / mse), peak=peak, mse=mse)
