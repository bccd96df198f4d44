"""Hierarchical content names for layered point-cloud streams.

Every addressable unit of content gets a readable, prefix-routable name:

    /PointCloudService/<dataset>/TimeWindow_<stamp>/GoF_<nnnn>/TopLayer
    /PointCloudService/<dataset>/TimeWindow_<stamp>/GoF_<nnnn>/LastLayer/<segment>
    /PointCloudService/<dataset>/MetaData

with an optional trailing chunk component ``c=<n>`` once a segment payload
is split into packets.  Forwarders match on prefixes, so the component
order goes from most shared (service) to most specific (chunk).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

SERVICE = "PointCloudService"
TOP_LAYER = "TopLayer"
LAST_LAYER = "LastLayer"
METADATA = "MetaData"

# Last-layer segment labels in ladder order: the base retention tier and
# the three enhancement tiers stacked on top of it.
SEGMENT_LABELS = ("30", "enhanced30-50", "enhanced50-75", "enhanced75-100")

_WINDOW_RE = re.compile(r"^TimeWindow_\d{8}T\d{6}$")
_GOF_RE = re.compile(r"^GoF_(\d{4})$")
_CHUNK_RE = re.compile(r"^c=(0|[1-9]\d*)$")
_COMPONENT_RE = re.compile(r"^[A-Za-z0-9._=-]+$")

GOF_MIN = 1
GOF_MAX = 9999


class NameFormatError(ValueError):
    """Raised when text does not parse as a well-formed content name."""


@dataclass(frozen=True)
class Name:
    """An immutable, already-validated content name."""

    components: tuple[str, ...]

    @property
    def text(self) -> str:
        # cached: names are interned into dict keys on every forwarder hop
        t = self.__dict__.get("_text")
        if t is None:
            t = "/" + "/".join(self.components)
            self.__dict__["_text"] = t
        return t

    def __str__(self) -> str:
        return self.text

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class ContentId:
    """Structured form of a content name.

    ``segment`` is only meaningful for the last layer; ``chunk`` is None
    for whole-segment names.  MetaData names carry no window or GoF.
    """

    dataset: str
    time_window: str | None = None
    gof: int | None = None
    layer: str | None = None  # TOP_LAYER, LAST_LAYER or METADATA
    segment: str | None = None
    chunk: int | None = None


def _check_dataset(dataset: str) -> None:
    if not dataset or not _COMPONENT_RE.match(dataset):
        raise NameFormatError(f"bad dataset component: {dataset!r}")
    if dataset in (METADATA, TOP_LAYER, LAST_LAYER, SERVICE):
        raise NameFormatError(f"dataset collides with a reserved token: {dataset!r}")


def format_name(cid: ContentId) -> Name:
    """Render a ContentId to its canonical Name.

    Rejects inconsistent ids (segment without LastLayer, GoF out of the
    4-digit range, malformed window stamps) rather than guessing.
    """
    _check_dataset(cid.dataset)
    parts = [SERVICE, cid.dataset]

    if cid.layer == METADATA:
        if cid.time_window is not None or cid.gof is not None or cid.segment is not None:
            raise NameFormatError("MetaData names carry no window, GoF or segment")
        parts.append(METADATA)
    elif cid.layer in (TOP_LAYER, LAST_LAYER):
        if cid.time_window is None or cid.gof is None:
            raise NameFormatError("layer names need both time_window and gof")
        if not _WINDOW_RE.match(cid.time_window):
            raise NameFormatError(f"bad time window token: {cid.time_window!r}")
        if not (GOF_MIN <= cid.gof <= GOF_MAX):
            raise NameFormatError(f"gof index out of range 1..9999: {cid.gof}")
        parts.extend((cid.time_window, f"GoF_{cid.gof:04d}", cid.layer))
        if cid.layer == LAST_LAYER:
            if cid.segment not in SEGMENT_LABELS:
                raise NameFormatError(f"unknown last-layer segment: {cid.segment!r}")
            parts.append(cid.segment)
        elif cid.segment is not None:
            raise NameFormatError("TopLayer names carry no segment")
    else:
        raise NameFormatError(f"unknown layer: {cid.layer!r}")

    if cid.chunk is not None:
        if cid.chunk < 0:
            raise NameFormatError(f"negative chunk index: {cid.chunk}")
        parts.append(f"c={cid.chunk}")
    return Name(tuple(parts))


def parse_name(text: str) -> ContentId:
    """Parse canonical name text back to a ContentId (inverse of format_name)."""
    if not text.startswith("/"):
        raise NameFormatError(f"names start with '/': {text!r}")
    comps = text[1:].split("/")
    if len(comps) < 3 or comps[0] != SERVICE:
        raise NameFormatError(f"not a {SERVICE} name: {text!r}")
    dataset = comps[1]
    _check_dataset(dataset)
    rest = list(comps[2:])

    chunk = None
    m = _CHUNK_RE.match(rest[-1])
    if m:
        chunk = int(m.group(1))
        rest.pop()
    if not rest:
        raise NameFormatError(f"chunk component without content: {text!r}")

    if rest[0] == METADATA:
        if len(rest) != 1:
            raise NameFormatError(f"trailing components after MetaData: {text!r}")
        return ContentId(dataset=dataset, layer=METADATA, chunk=chunk)

    if len(rest) < 3:
        raise NameFormatError(f"truncated name: {text!r}")
    window, gof_tok, layer = rest[0], rest[1], rest[2]
    if not _WINDOW_RE.match(window):
        raise NameFormatError(f"bad time window token: {window!r}")
    m = _GOF_RE.match(gof_tok)
    if not m:
        raise NameFormatError(f"bad GoF token: {gof_tok!r}")
    gof = int(m.group(1))
    if gof < GOF_MIN:
        raise NameFormatError(f"gof index out of range 1..9999: {gof}")

    if layer == TOP_LAYER:
        if len(rest) != 3:
            raise NameFormatError(f"trailing components after TopLayer: {text!r}")
        return ContentId(dataset, window, gof, TOP_LAYER, chunk=chunk)
    if layer == LAST_LAYER:
        if len(rest) != 4 or rest[3] not in SEGMENT_LABELS:
            raise NameFormatError(f"LastLayer needs one segment component: {text!r}")
        return ContentId(dataset, window, gof, LAST_LAYER, segment=rest[3], chunk=chunk)
    raise NameFormatError(f"unknown layer component: {layer!r}")


def is_prefix(prefix: Name, name: Name) -> bool:
    """True when ``prefix`` matches the leading components of ``name``."""
    n = len(prefix.components)
    return n <= len(name.components) and name.components[:n] == prefix.components


def with_chunk(name: Name, chunk: int) -> Name:
    """Append a chunk component; the base name must not already have one."""
    if chunk < 0:
        raise NameFormatError(f"negative chunk index: {chunk}")
    if name.components and _CHUNK_RE.match(name.components[-1]):
        raise NameFormatError(f"name already chunked: {name.text}")
    return Name(name.components + (f"c={chunk}",))


def chunk_index(name: Name) -> int | None:
    """Chunk index of a name, or None when it has no chunk component."""
    if not name.components:
        return None
    m = _CHUNK_RE.match(name.components[-1])
    return int(m.group(1)) if m else None


def service_prefix(dataset: str | None = None) -> Name:
    """Routing prefix: the whole service, or one dataset under it."""
    if dataset is None:
        return Name((SERVICE,))
    _check_dataset(dataset)
    return Name((SERVICE, dataset))


def metadata_name(dataset: str) -> Name:
    return format_name(ContentId(dataset=dataset, layer=METADATA))


def top_layer_name(dataset: str, time_window: str, gof: int) -> Name:
    return format_name(ContentId(dataset, time_window, gof, TOP_LAYER))


def segment_name(dataset: str, time_window: str, gof: int, segment: str) -> Name:
    return format_name(ContentId(dataset, time_window, gof, LAST_LAYER, segment))


def enumerate_gof_segments(dataset: str, time_window: str, gof: int) -> tuple[Name, ...]:
    """All five per-GoF segment names in ladder order: TopLayer first,
    then the four last-layer tiers from base to top enhancement."""
    names = [top_layer_name(dataset, time_window, gof)]
    names.extend(segment_name(dataset, time_window, gof, s) for s in SEGMENT_LABELS)
    return tuple(names)


def segment_label_of(name: Name) -> str:
    """Coarse label used for per-segment packet accounting."""
    cid = parse_name(name.text)
    if cid.layer == METADATA:
        return METADATA
    if cid.layer == TOP_LAYER:
        return TOP_LAYER
    return cid.segment  # type: ignore[return-value]
