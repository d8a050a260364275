"""Per-synset ternary representatives via the per-feature mode.

A synset with several discretized image rows collapses to one ternary
vector: each feature takes the most frequent value among the synset's
rows.  Any tie, two-way or three-way, resolves to 0 - a feature that does
not consistently characterize the synset is treated as uncharacteristic,
which keeps presence sets small and high-precision.

FNEREP1 (binary, little-endian)
    bytes 0-6  magic ``FNEREP1``
    u32 synset_count, u32 n_features,
    then per synset: u16 id length, UTF-8 id bytes, u32 n_source_samples,
    one packed 2-bit ternary row (ceil(n_features / 4) bytes).
    Presence bitsets are recomputed on load, never stored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateSynsetId,
    EmptySynset,
    IndexOutOfRange,
    TruncatedPayload,
)
from .fne import TernaryMatrix
from .packing import (
    TERNARY_BYTES_PER_ROW,
    pack_ternary,
    popcount,
    presence_words,
    unpack_ternary,
)

REP_MAGIC = b"FNEREP1"
REP_HEADER = struct.Struct("<7sII")


@dataclass(frozen=True)
class TernaryVector:
    """One packed ternary row of length n_features."""

    n_features: int
    packed: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "TernaryVector":
        values = np.asarray(values, dtype=np.int8).ravel()
        if not np.isin(values, (-1, 0, 1)).all():
            raise ValueError("ternary values must lie in {-1, 0, 1}")
        return cls(n_features=values.shape[0],
                   packed=pack_ternary(values[None, :])[0])

    def values(self) -> np.ndarray:
        return unpack_ternary(self.packed[None, :], self.n_features)[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TernaryVector)
            and self.n_features == other.n_features
            and np.array_equal(self.packed, other.packed)
        )


@dataclass(frozen=True)
class PresenceBitset:
    """Bit per feature, set exactly where the ternary value is +1."""

    n_features: int
    words: np.ndarray

    @classmethod
    def from_ternary(cls, v: TernaryVector) -> "PresenceBitset":
        return cls(n_features=v.n_features, words=presence_words(v.values())[0])

    @property
    def popcount(self) -> int:
        return popcount(self.words)

    def indices(self) -> np.ndarray:
        """Feature indices of the set bits, ascending."""
        bits = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return np.flatnonzero(bits[: self.n_features])


def presence_set(v: TernaryVector) -> PresenceBitset:
    """The characteristic-by-presence feature set of a ternary vector."""
    return PresenceBitset.from_ternary(v)


@dataclass(frozen=True)
class SynsetRepresentative:
    synset_id: str
    ternary: TernaryVector
    presence: PresenceBitset
    n_source_samples: int

    @classmethod
    def from_ternary(
        cls, synset_id: str, ternary: TernaryVector, n_source_samples: int
    ) -> "SynsetRepresentative":
        if n_source_samples < 1:
            raise EmptySynset(f"synset {synset_id!r} has no source samples")
        return cls(
            synset_id=synset_id,
            ternary=ternary,
            presence=PresenceBitset.from_ternary(ternary),
            n_source_samples=n_source_samples,
        )

    @property
    def n_features(self) -> int:
        return self.ternary.n_features


def mode_values(rows: np.ndarray) -> np.ndarray:
    """Per-column mode of a ternary row stack; ties resolve to 0."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int8))
    count_plus = (rows == 1).sum(axis=0)
    count_minus = (rows == -1).sum(axis=0)
    count_zero = (rows == 0).sum(axis=0)
    out = np.zeros(rows.shape[1], dtype=np.int8)
    out[(count_plus > count_minus) & (count_plus > count_zero)] = 1
    out[(count_minus > count_plus) & (count_minus > count_zero)] = -1
    return out


def compute_representative(
    ternary_rows: TernaryMatrix,
    row_indices: Sequence[int],
    synset_id: str,
) -> SynsetRepresentative:
    """Collapse the selected sample rows into one representative vector."""
    indices = np.asarray(list(row_indices), dtype=np.intp)
    if indices.size == 0:
        raise EmptySynset(f"synset {synset_id!r} selects no rows")
    if indices.min() < 0 or indices.max() >= ternary_rows.n_samples:
        raise IndexOutOfRange(
            f"row index out of range for synset {synset_id!r}: "
            f"matrix has {ternary_rows.n_samples} rows"
        )
    values = mode_values(ternary_rows.rows(indices))
    return SynsetRepresentative.from_ternary(
        synset_id, TernaryVector.from_values(values), int(indices.size)
    )


def build_all_representatives(
    ternary: TernaryMatrix, groups: Mapping[str, Sequence[int]]
) -> list[SynsetRepresentative]:
    """One representative per synset, sorted by synset id."""
    return [
        compute_representative(ternary, groups[synset_id], synset_id)
        for synset_id in sorted(groups)
    ]


def write_representatives(
    reps: Iterable[SynsetRepresentative], sink: BinaryIO
) -> None:
    reps = list(reps)
    if not reps:
        raise EmptySynset("refusing to write an empty representative file")
    n_features = reps[0].n_features
    for rep in reps:
        if rep.n_features != n_features:
            raise DimensionMismatch(
                f"representative {rep.synset_id!r} has {rep.n_features} features, "
                f"expected {n_features}"
            )
    sink.write(REP_HEADER.pack(REP_MAGIC, len(reps), n_features))
    for rep in reps:
        id_bytes = rep.synset_id.encode("utf-8")
        sink.write(struct.pack("<H", len(id_bytes)))
        sink.write(id_bytes)
        sink.write(struct.pack("<I", rep.n_source_samples))
        sink.write(rep.ternary.packed.tobytes())


def read_representatives(source: BinaryIO) -> list[SynsetRepresentative]:
    header = source.read(REP_HEADER.size)
    if len(header) < REP_HEADER.size:
        raise TruncatedPayload(
            f"header is {len(header)} bytes, expected {REP_HEADER.size}"
        )
    magic, synset_count, n_features = REP_HEADER.unpack(header)
    if magic != REP_MAGIC:
        raise BadMagic(f"expected magic {REP_MAGIC!r}, found {magic!r}")
    row_bytes = TERNARY_BYTES_PER_ROW(n_features)
    reps: list[SynsetRepresentative] = []
    seen: set[str] = set()
    for _ in range(synset_count):
        prefix = source.read(2)
        if len(prefix) < 2:
            raise TruncatedPayload("truncated synset id length")
        (id_len,) = struct.unpack("<H", prefix)
        record = source.read(id_len + 4 + row_bytes)
        if len(record) < id_len + 4 + row_bytes:
            raise TruncatedPayload("truncated synset record")
        synset_id = record[:id_len].decode("utf-8")
        if synset_id in seen:
            raise DuplicateSynsetId(f"synset {synset_id!r} appears twice")
        seen.add(synset_id)
        (n_source_samples,) = struct.unpack("<I", record[id_len:id_len + 4])
        packed = np.frombuffer(record[id_len + 4:], dtype=np.uint8).copy()
        vector = TernaryVector(n_features=n_features, packed=packed)
        vector.values()  # reject reserved codes up front
        reps.append(
            SynsetRepresentative.from_ternary(synset_id, vector, n_source_samples)
        )
    return reps


def bootstrap_stability(
    ternary: TernaryMatrix,
    groups: Mapping[str, Sequence[int]],
    n_resamples: int = 100,
    seed: int = 0,
) -> dict[str, float]:
    """Diagnostic: mean per-feature flip rate under sample resampling.

    For each synset, rows are resampled with replacement ``n_resamples``
    times; the reported number is the mean fraction of features whose mode
    differs from the full-sample representative.  Lower is more stable.
    """
    rng = np.random.default_rng(seed)
    report: dict[str, float] = {}
    for synset_id in sorted(groups):
        indices = np.asarray(list(groups[synset_id]), dtype=np.intp)
        reference = compute_representative(ternary, indices, synset_id)
        reference_values = reference.ternary.values()
        rows = ternary.rows(indices)
        flips = 0.0
        for _ in range(n_resamples):
            resample = rng.integers(0, indices.size, size=indices.size)
            resampled_mode = mode_values(rows[resample])
            flips += float(np.mean(resampled_mode != reference_values))
        report[synset_id] = flips / n_resamples
    return report
