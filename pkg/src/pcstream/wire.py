"""Packet-level framing.

Both packet kinds share a fixed header overhead plus the textual name;
Data additionally carries its payload.  Segments larger than the payload
MTU are split into chunks, one Data packet per ``c=<n>`` name, and every
chunk advertises the segment's last chunk index so a receiver can learn
the chunk count from any one of them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .naming import Name, chunk_index, with_chunk

HEADER_OVERHEAD = 40  # fixed per-packet framing cost, both kinds
MTU_PAYLOAD = 1200  # max Data payload bytes per chunk
INTEREST_LIFETIME_NS = 4_000_000_000  # pending-interest lifetime


class WireError(ValueError):
    """Raised for malformed chunking requests."""


@dataclass(frozen=True)
class Interest:
    """Request for one named chunk; the nonce de-duplicates loops."""

    name: Name
    nonce: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "_wire", HEADER_OVERHEAD + len(self.name.text))

    def wire_size(self) -> int:
        return self._wire


@dataclass(frozen=True)
class DataPacket:
    """One named chunk.  Payload bytes are not simulated, only their size;
    last_chunk is the final chunk index of the owning segment."""

    name: Name
    payload_len: int
    last_chunk: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_wire", HEADER_OVERHEAD + len(self.name.text) + self.payload_len
        )

    def wire_size(self) -> int:
        return self._wire


def chunk_payload_sizes(total_len: int, mtu: int = MTU_PAYLOAD) -> list[int]:
    """Per-chunk payload sizes for a segment of total_len bytes.

    An empty segment still occupies one zero-length chunk so the name
    remains fetchable.
    """
    if total_len < 0:
        raise WireError(f"negative segment length: {total_len}")
    if mtu < 1:
        raise WireError(f"mtu must be positive, got {mtu}")
    if total_len == 0:
        return [0]
    full, rem = divmod(total_len, mtu)
    return [mtu] * full + ([rem] if rem else [])


def chunk_names(base_name: Name, total_len: int, mtu: int = MTU_PAYLOAD) -> list[Name]:
    """Chunked names c=0..k-1 for a segment of total_len bytes."""
    if chunk_index(base_name) is not None:
        raise WireError(f"name already has a chunk suffix: {base_name.text}")
    return [with_chunk(base_name, i) for i in range(len(chunk_payload_sizes(total_len, mtu)))]


def make_data_packets(
    base_name: Name, total_len: int, mtu: int = MTU_PAYLOAD
) -> tuple[DataPacket, ...]:
    """All Data packets of one segment, in chunk order."""
    sizes = chunk_payload_sizes(total_len, mtu)
    last = len(sizes) - 1
    if chunk_index(base_name) is not None:
        raise WireError(f"name already has a chunk suffix: {base_name.text}")
    return tuple(
        DataPacket(name=with_chunk(base_name, i), payload_len=sz, last_chunk=last)
        for i, sz in enumerate(sizes)
    )
