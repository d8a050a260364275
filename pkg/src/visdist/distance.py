"""Visual similarity and distance between synset representatives.

The similarity between two representatives counts features characteristic
by presence on either side: with c_i_j the number of features holding value
i in the first representative and j in the second,

    sim = c_1_1 / (c_1_m1 + c_1_0 + c_1_1 + c_0_1 + c_m1_1)
    vd  = 1 - sim

The denominator is exactly the union of the two presence sets and c_1_1
their intersection, so vd is the Jaccard distance on presence bitsets.
The pairwise kernel exploits that: popcount(AND) over 64-bit words plus
precomputed per-set popcounts, O(M/64) per pair.  The ternary-count path
is kept for diagnostics and as an independent route for verification.

When both presence sets are empty the ratio is 0/0; we take sim = 1
(vd = 0), the Jaccard convention for identical-because-vacuous sets, which
keeps vd(s, s) = 0 universally.

VDMAT1 (binary, little-endian)
    bytes 0-5  magic ``VDMAT1``
    u32 synset count S, then S ids (u16 length + UTF-8 bytes),
    u16 metric name length + bytes,
    u32 parameter blob length + UTF-8 ``key=value`` lines,
    then S*(S-1)/2 f32 condensed distances, pair (i, j) with i < j stored
    at index i*S - i*(i+1)/2 + (j - i - 1).
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import BinaryIO, NamedTuple, Sequence

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateSynsetId,
    TooFewSynsets,
    TruncatedPayload,
)
from .representative import SynsetRepresentative
from .validation import condensed_index

VDMAT_MAGIC = b"VDMAT1"


class PairCounts(NamedTuple):
    """Counts of ternary value pairs where at least one side is +1."""

    c_1_1: int
    c_1_0: int
    c_1_m1: int
    c_0_1: int
    c_m1_1: int


def _check_same_features(a: SynsetRepresentative, b: SynsetRepresentative) -> None:
    if a.n_features != b.n_features:
        raise DimensionMismatch(
            f"representatives differ in feature count: "
            f"{a.n_features} vs {b.n_features}"
        )


def pair_counts(a: SynsetRepresentative, b: SynsetRepresentative) -> PairCounts:
    """Exact value-pair counts from the unpacked ternary vectors."""
    _check_same_features(a, b)
    va = a.ternary.values()
    vb = b.ternary.values()
    a_plus = va == 1
    b_plus = vb == 1
    return PairCounts(
        c_1_1=int(np.count_nonzero(a_plus & b_plus)),
        c_1_0=int(np.count_nonzero(a_plus & (vb == 0))),
        c_1_m1=int(np.count_nonzero(a_plus & (vb == -1))),
        c_0_1=int(np.count_nonzero((va == 0) & b_plus)),
        c_m1_1=int(np.count_nonzero((va == -1) & b_plus)),
    )


def visual_similarity(a: SynsetRepresentative, b: SynsetRepresentative) -> float:
    """Shared-presence proportion in [0, 1]; 1 when both presence sets are empty."""
    counts = pair_counts(a, b)
    denominator = (
        counts.c_1_m1 + counts.c_1_0 + counts.c_1_1 + counts.c_0_1 + counts.c_m1_1
    )
    if denominator == 0:
        return 1.0
    return counts.c_1_1 / denominator


def visual_distance(a: SynsetRepresentative, b: SynsetRepresentative) -> float:
    return 1.0 - visual_similarity(a, b)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances over a sorted synset list, condensed."""

    synset_ids: tuple[str, ...]
    condensed: np.ndarray
    metric_name: str
    parameters: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = self.synset_ids
        if len(ids) < 2:
            raise TooFewSynsets(f"a distance matrix needs >= 2 synsets, got {len(ids)}")
        if any(ids[k] >= ids[k + 1] for k in range(len(ids) - 1)):
            raise DuplicateSynsetId("synset ids must be strictly sorted and unique")
        condensed = np.ascontiguousarray(self.condensed, dtype=np.float32).ravel()
        expected = len(ids) * (len(ids) - 1) // 2
        if condensed.size != expected:
            raise DimensionMismatch(
                f"condensed length {condensed.size}, expected {expected}"
            )
        if condensed.size and (condensed.min() < 0.0 or condensed.max() > 1.0):
            raise ValueError("distances must lie in [0, 1]")
        object.__setattr__(self, "condensed", condensed)

    @property
    def size(self) -> int:
        return len(self.synset_ids)

    def index(self, i: int, j: int) -> int:
        return condensed_index(i, j, self.size)

    def value(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return float(self.condensed[self.index(i, j)])

    def square(self) -> np.ndarray:
        """Expand to a dense symmetric float64 matrix with zero diagonal."""
        n = self.size
        out = np.zeros((n, n), dtype=np.float64)
        iu = np.triu_indices(n, k=1)
        out[iu] = self.condensed
        out[(iu[1], iu[0])] = self.condensed
        return out


def presence_matrix(reps: Sequence[SynsetRepresentative]) -> np.ndarray:
    """Stack presence bitsets into a (S, words) uint64 array."""
    return np.stack([rep.presence.words for rep in reps])


def pair_distances(
    words: np.ndarray, idx_a: np.ndarray, idx_b: np.ndarray
) -> np.ndarray:
    """Vectorized vd over arbitrary index pairs of stacked presence words."""
    wa = words[idx_a]
    wb = words[idx_b]
    inter = np.bitwise_count(wa & wb).sum(axis=1, dtype=np.int64)
    union = (
        np.bitwise_count(wa).sum(axis=1, dtype=np.int64)
        + np.bitwise_count(wb).sum(axis=1, dtype=np.int64)
        - inter
    )
    out = np.zeros(inter.shape, dtype=np.float64)
    nonempty = union > 0
    out[nonempty] = 1.0 - inter[nonempty] / union[nonempty]
    return out


def _fill_rows(
    words: np.ndarray,
    popcounts: np.ndarray,
    condensed: np.ndarray,
    offsets: np.ndarray,
    row_start: int,
    row_end: int,
) -> None:
    n = words.shape[0]
    for i in range(row_start, row_end):
        tail = words[i + 1:]
        inter = np.bitwise_count(words[i] & tail).sum(axis=1, dtype=np.int64)
        union = popcounts[i] + popcounts[i + 1:] - inter
        vd = np.zeros(inter.shape, dtype=np.float64)
        nonempty = union > 0
        vd[nonempty] = 1.0 - inter[nonempty] / union[nonempty]
        condensed[offsets[i]:offsets[i] + (n - 1 - i)] = vd


def _row_blocks(n: int, n_blocks: int) -> list[tuple[int, int]]:
    """Split rows into blocks of roughly equal pair count."""
    total = n * (n - 1) // 2
    target = max(1, total // max(1, n_blocks))
    blocks: list[tuple[int, int]] = []
    start, acc = 0, 0
    for i in range(n - 1):
        acc += n - 1 - i
        if acc >= target:
            blocks.append((start, i + 1))
            start, acc = i + 1, 0
    if start < n - 1:
        blocks.append((start, n - 1))
    return blocks


def distance_matrix(
    reps: Sequence[SynsetRepresentative],
    threads: int | None = None,
    parameters: dict[str, str] | None = None,
) -> DistanceMatrix:
    """All-pairs visual distance via the presence-bitset popcount kernel.

    Representatives are taken in sorted synset-id order.  Each condensed
    cell has exactly one writer, so the result is independent of the thread
    count, bit for bit.
    """
    reps = sorted(reps, key=lambda rep: rep.synset_id)
    n = len(reps)
    if n < 2:
        raise TooFewSynsets(f"need >= 2 representatives, got {n}")
    ids = [rep.synset_id for rep in reps]
    for k in range(n - 1):
        if ids[k] == ids[k + 1]:
            raise DuplicateSynsetId(f"synset {ids[k]!r} appears twice")
    n_features = reps[0].n_features
    for rep in reps:
        if rep.n_features != n_features:
            raise DimensionMismatch(
                f"representative {rep.synset_id!r} has {rep.n_features} features, "
                f"expected {n_features}"
            )

    words = presence_matrix(reps)
    popcounts = np.bitwise_count(words).sum(axis=1, dtype=np.int64)
    condensed = np.empty(n * (n - 1) // 2, dtype=np.float32)
    row_sizes = np.arange(n - 1, -1, -1)
    offsets = np.concatenate([[0], np.cumsum(row_sizes)[:-1]])

    threads = max(1, int(threads) if threads else 1)
    if threads == 1 or n < 4:
        _fill_rows(words, popcounts, condensed, offsets, 0, n - 1)
    else:
        blocks = _row_blocks(n, threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_fill_rows, words, popcounts, condensed, offsets, a, b)
                for a, b in blocks
            ]
            for future in futures:
                future.result()

    merged = {"kernel": "popcount64", "tie_rule": "ties_to_zero"}
    merged.update(parameters or {})
    return DistanceMatrix(
        synset_ids=tuple(ids),
        condensed=condensed,
        metric_name="vd",
        parameters=merged,
    )


def write_distance_matrix(matrix: DistanceMatrix, sink: BinaryIO) -> None:
    sink.write(VDMAT_MAGIC)
    sink.write(struct.pack("<I", matrix.size))
    for synset_id in matrix.synset_ids:
        raw = synset_id.encode("utf-8")
        sink.write(struct.pack("<H", len(raw)))
        sink.write(raw)
    name = matrix.metric_name.encode("utf-8")
    sink.write(struct.pack("<H", len(name)))
    sink.write(name)
    blob = "".join(
        f"{key}={matrix.parameters[key]}\n" for key in sorted(matrix.parameters)
    ).encode("utf-8")
    sink.write(struct.pack("<I", len(blob)))
    sink.write(blob)
    sink.write(matrix.condensed.astype("<f4").tobytes())


def read_distance_matrix(source: BinaryIO) -> DistanceMatrix:
    magic = source.read(len(VDMAT_MAGIC))
    if magic != VDMAT_MAGIC:
        raise BadMagic(f"expected magic {VDMAT_MAGIC!r}, found {magic!r}")

    def take(size: int, what: str) -> bytes:
        raw = source.read(size)
        if len(raw) < size:
            raise TruncatedPayload(f"truncated {what}")
        return raw

    (count,) = struct.unpack("<I", take(4, "synset count"))
    ids = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2, "id length"))
        ids.append(take(id_len, "synset id").decode("utf-8"))
    (name_len,) = struct.unpack("<H", take(2, "metric name length"))
    metric_name = take(name_len, "metric name").decode("utf-8")
    (blob_len,) = struct.unpack("<I", take(4, "parameter blob length"))
    blob = take(blob_len, "parameter blob").decode("utf-8")
    parameters: dict[str, str] = {}
    for line in blob.splitlines():
        if line:
            key, _, value = line.partition("=")
            parameters[key] = value
    n_pairs = count * (count - 1) // 2
    payload = take(n_pairs * 4, "condensed values")
    condensed = np.frombuffer(payload, dtype="<f4").astype(np.float32, copy=True)
    return DistanceMatrix(
        synset_ids=tuple(ids),
        condensed=condensed,
        metric_name=metric_name,
        parameters=parameters,
    )
