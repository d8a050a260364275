"""Raw activation matrices, sample manifests, and layer layouts.

File formats:

FNERAW1 (binary, little-endian)
    bytes 0-6   magic ``FNERAW1``
    bytes 7-10  u32 n_samples
    bytes 11-14 u32 n_features
    then n_samples * n_features IEEE-754 f32 values, row-major.

Manifest (text)
    TSV ``sample_index<TAB>image_id<TAB>synset_id``, LF line endings,
    ``#``-prefixed comment lines ignored.  Indices must be exactly
    0..n_samples-1, in any order.

Layer layout (text)
    TSV ``layer_name<TAB>kind<TAB>start<TAB>end_exclusive`` with kind in
    {conv, fc}; segments must tile [0, n_features) without gaps.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, NamedTuple, TextIO

import numpy as np

from .errors import (
    BadMagic,
    DuplicateIndex,
    GapInIndices,
    LayoutMismatch,
    MalformedRow,
    NonFiniteValue,
    TruncatedPayload,
)
from .validation import check_raw_matrix

RAW_MAGIC = b"FNERAW1"
RAW_HEADER = struct.Struct("<7sII")

LAYER_KINDS = ("conv", "fc")


def write_raw_matrix(matrix: np.ndarray, sink: BinaryIO) -> None:
    """Write a validated activation matrix in FNERAW1 layout."""
    matrix = check_raw_matrix(matrix, name="matrix")
    n_samples, n_features = matrix.shape
    sink.write(RAW_HEADER.pack(RAW_MAGIC, n_samples, n_features))
    sink.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_raw_matrix(source: BinaryIO) -> np.ndarray:
    """Read an FNERAW1 file back into a float32 matrix.

    Raises BadMagic, TruncatedPayload, or NonFiniteValue (with the offending
    cell) so upstream extraction bugs surface instead of propagating.
    """
    header = source.read(RAW_HEADER.size)
    if len(header) < RAW_HEADER.size:
        raise TruncatedPayload(
            f"header is {len(header)} bytes, expected {RAW_HEADER.size}"
        )
    magic, n_samples, n_features = RAW_HEADER.unpack(header)
    if magic != RAW_MAGIC:
        raise BadMagic(f"expected magic {RAW_MAGIC!r}, found {magic!r}")
    if n_samples < 1 or n_features < 1:
        raise TruncatedPayload(
            f"declared shape {n_samples}x{n_features} is not a valid matrix"
        )
    expected = n_samples * n_features * 4
    payload = source.read(expected)
    if len(payload) < expected:
        raise TruncatedPayload(
            f"payload is {len(payload)} bytes, expected {expected} "
            f"for a {n_samples}x{n_features} matrix"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n_samples, n_features)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonFiniteValue(f"non-finite activation at sample {i}, feature {j}")
    return values.astype(np.float32, copy=True)


class ManifestEntry(NamedTuple):
    sample_index: int
    image_id: str
    synset_id: str


@dataclass(frozen=True)
class Manifest:
    """Ordered mapping from sample rows to image and synset identifiers."""

    entries: tuple[ManifestEntry, ...]

    @property
    def n_samples(self) -> int:
        return len(self.entries)

    def synset_ids(self) -> list[str]:
        return sorted({e.synset_id for e in self.entries})


def read_manifest(source: TextIO | Iterable[str]) -> Manifest:
    """Parse a manifest TSV; entries come back sorted by sample index."""
    entries: list[ManifestEntry] = []
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedRow(
                f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
            )
        index_text, image_id, synset_id = fields
        try:
            sample_index = int(index_text)
        except ValueError:
            raise MalformedRow(
                f"line {lineno}: sample_index {index_text!r} is not an integer"
            ) from None
        if sample_index < 0:
            raise MalformedRow(f"line {lineno}: sample_index {sample_index} is negative")
        if not synset_id:
            raise MalformedRow(f"line {lineno}: empty synset_id")
        entries.append(ManifestEntry(sample_index, image_id, synset_id))

    entries.sort(key=lambda e: e.sample_index)
    seen = -1
    for entry in entries:
        if entry.sample_index == seen:
            raise DuplicateIndex(f"sample_index {entry.sample_index} appears twice")
        if entry.sample_index != seen + 1:
            raise GapInIndices(
                f"sample indices jump from {seen} to {entry.sample_index}"
            )
        seen = entry.sample_index
    return Manifest(entries=tuple(entries))


def write_manifest(manifest: Manifest, sink: TextIO) -> None:
    for entry in manifest.entries:
        sink.write(f"{entry.sample_index}\t{entry.image_id}\t{entry.synset_id}\n")


def group_by_synset(manifest: Manifest) -> dict[str, list[int]]:
    """Partition sample indices by synset, groups ordered by synset id."""
    groups: dict[str, list[int]] = {}
    for entry in manifest.entries:
        groups.setdefault(entry.synset_id, []).append(entry.sample_index)
    return {synset_id: sorted(groups[synset_id]) for synset_id in sorted(groups)}


class LayerSegment(NamedTuple):
    layer_name: str
    kind: str
    start: int
    end_exclusive: int


@dataclass(frozen=True)
class LayerLayout:
    """Contiguous feature ranges contributed by each captured layer."""

    segments: tuple[LayerSegment, ...]

    @property
    def n_features(self) -> int:
        return self.segments[-1].end_exclusive if self.segments else 0

    def check_covers(self, n_features: int) -> None:
        if self.n_features != n_features:
            raise LayoutMismatch(
                f"layout covers [0, {self.n_features}) but the matrix has "
                f"{n_features} features"
            )


def read_layer_layout(source: TextIO | Iterable[str]) -> LayerLayout:
    segments: list[LayerSegment] = []
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedRow(
                f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}"
            )
        name, kind, start_text, end_text = fields
        if kind not in LAYER_KINDS:
            raise MalformedRow(f"line {lineno}: kind {kind!r} not in {LAYER_KINDS}")
        try:
            start, end = int(start_text), int(end_text)
        except ValueError:
            raise MalformedRow(f"line {lineno}: non-integer feature range") from None
        if start < 0 or end <= start:
            raise MalformedRow(f"line {lineno}: empty or negative range [{start}, {end})")
        segments.append(LayerSegment(name, kind, start, end))

    segments.sort(key=lambda s: s.start)
    cursor = 0
    for segment in segments:
        if segment.start != cursor:
            raise LayoutMismatch(
                f"segment {segment.layer_name!r} starts at {segment.start}, "
                f"expected {cursor}"
            )
        cursor = segment.end_exclusive
    return LayerLayout(segments=tuple(segments))


def write_layer_layout(layout: LayerLayout, sink: TextIO) -> None:
    for seg in layout.segments:
        sink.write(f"{seg.layer_name}\t{seg.kind}\t{seg.start}\t{seg.end_exclusive}\n")
