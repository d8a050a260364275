"""Feature standardization and ternary discretization of activation matrices.

Each feature is standardized against the dataset (z-scores with the
population standard deviation), then mapped into {-1, 0, +1} with two
thresholds: values at or below ``ft_minus`` become -1 (characteristic by
absence), values at or greater than ``ft_plus`` become +1 (characteristic by
presence), everything in between is 0 (uncharacteristic).  Boundary values
belong to the characteristic classes, and the -1 rule is checked first, so
with ft_minus = ft_plus = 0 an exact zero maps to -1.

FNETER1 (binary, little-endian)
    bytes 0-6   magic ``FNETER1``
    u32 n_samples, u32 n_features, f32 ft_minus, f32 ft_plus,
    then one packed 2-bit row per sample (ceil(n_features / 4) bytes each);
    see :mod:`visdist.packing` for the bit layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import BadMagic, DimensionMismatch, LayoutMismatch, TruncatedPayload
from .ingest import LayerLayout
from .packing import TERNARY_BYTES_PER_ROW, pack_ternary, unpack_ternary
from .validation import check_raw_matrix

TERNARY_MAGIC = b"FNETER1"
TERNARY_HEADER = struct.Struct("<7sIIff")

DEFAULT_FT_MINUS = -0.25
DEFAULT_FT_PLUS = 0.15


@dataclass(frozen=True)
class StandardizationStats:
    """Per-feature means and population standard deviations."""

    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64).ravel()
        stddevs = np.asarray(self.stddevs, dtype=np.float64).ravel()
        if means.shape != stddevs.shape:
            raise DimensionMismatch("means and stddevs differ in length")
        if np.any(stddevs < 0):
            raise ValueError("standard deviations must be non-negative")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stddevs)

    @property
    def n_features(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class Thresholds:
    """Discretization cut points, ft_minus <= 0 <= ft_plus."""

    ft_minus: float = DEFAULT_FT_MINUS
    ft_plus: float = DEFAULT_FT_PLUS

    def __post_init__(self):
        if not (self.ft_minus <= 0.0 <= self.ft_plus):
            raise ValueError(
                f"thresholds must satisfy ft_minus <= 0 <= ft_plus, "
                f"got ({self.ft_minus}, {self.ft_plus})"
            )


@dataclass(frozen=True)
class TernaryMatrix:
    """Per-sample discretized features, 2-bit packed, values in {-1, 0, 1}."""

    n_samples: int
    n_features: int
    packed: np.ndarray
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        expected = (self.n_samples, TERNARY_BYTES_PER_ROW(self.n_features))
        if self.packed.shape != expected:
            raise DimensionMismatch(
                f"packed shape {self.packed.shape} does not match declared "
                f"{self.n_samples}x{self.n_features}"
            )

    @classmethod
    def from_values(
        cls, values: np.ndarray, thresholds: Thresholds | None = None
    ) -> "TernaryMatrix":
        values = np.asarray(values, dtype=np.int8)
        if values.ndim != 2:
            raise ValueError("expected a 2-D ternary value array")
        if not np.isin(values, (-1, 0, 1)).all():
            raise ValueError("ternary values must lie in {-1, 0, 1}")
        return cls(
            n_samples=values.shape[0],
            n_features=values.shape[1],
            packed=pack_ternary(values),
            thresholds=thresholds or Thresholds(),
        )

    def values(self) -> np.ndarray:
        """Unpack to an int8 matrix of {-1, 0, 1}."""
        return unpack_ternary(self.packed, self.n_features)

    def rows(self, indices) -> np.ndarray:
        """Unpack only the selected sample rows."""
        return unpack_ternary(self.packed[np.asarray(indices, dtype=np.intp)],
                              self.n_features)


def standardize(matrix: np.ndarray) -> tuple[np.ndarray, StandardizationStats]:
    """Z-score each feature; constant features map to all-zero columns.

    Returns the standardized float32 matrix and the statistics used, so the
    same scaling can be replayed onto held-out samples.
    """
    matrix = check_raw_matrix(matrix, name="matrix")
    x64 = matrix.astype(np.float64)
    means = x64.mean(axis=0)
    stddevs = np.sqrt(np.mean((x64 - means) ** 2, axis=0))
    stats = StandardizationStats(means=means, stddevs=stddevs)
    return _apply(x64, stats), stats


def apply_standardization(
    matrix: np.ndarray, stats: StandardizationStats
) -> np.ndarray:
    """Standardize with previously computed statistics."""
    matrix = check_raw_matrix(matrix, name="matrix")
    if matrix.shape[1] != stats.n_features:
        raise DimensionMismatch(
            f"matrix has {matrix.shape[1]} features but stats cover "
            f"{stats.n_features}"
        )
    return _apply(matrix.astype(np.float64), stats)


def _apply(x64: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    safe = np.where(stats.stddevs > 0, stats.stddevs, 1.0)
    z = (x64 - stats.means) / safe
    z[:, stats.stddevs == 0] = 0.0
    return z.astype(np.float32)


def discretize(
    standardized: np.ndarray, thresholds: Thresholds | None = None
) -> TernaryMatrix:
    """Map standardized values into {-1, 0, +1} by the two thresholds."""
    thresholds = thresholds or Thresholds()
    standardized = check_raw_matrix(standardized, name="standardized")
    values = np.where(
        standardized <= thresholds.ft_minus,
        np.int8(-1),
        np.where(standardized >= thresholds.ft_plus, np.int8(1), np.int8(0)),
    ).astype(np.int8)
    return TernaryMatrix(
        n_samples=values.shape[0],
        n_features=values.shape[1],
        packed=pack_ternary(values),
        thresholds=thresholds,
    )


@dataclass(frozen=True)
class ClassFractions:
    """Counts and fractions of the three ternary classes over some scope."""

    n_cells: int
    count_minus: int
    count_zero: int
    count_plus: int

    @property
    def fractions(self) -> dict[str, float]:
        return {
            "-1": self.count_minus / self.n_cells,
            "0": self.count_zero / self.n_cells,
            "+1": self.count_plus / self.n_cells,
        }


@dataclass(frozen=True)
class ProportionReport:
    overall: ClassFractions
    per_layer: tuple[tuple[str, str, ClassFractions], ...]

    def to_dict(self) -> dict:
        report = {
            "n_cells": self.overall.n_cells,
            "overall": self.overall.fractions,
        }
        if self.per_layer:
            report["per_layer"] = [
                {"layer": name, "kind": kind, **fractions.fractions}
                for name, kind, fractions in self.per_layer
            ]
        return report


def _count_classes(values: np.ndarray) -> ClassFractions:
    return ClassFractions(
        n_cells=values.size,
        count_minus=int((values == -1).sum()),
        count_zero=int((values == 0).sum()),
        count_plus=int((values == 1).sum()),
    )


def feature_type_proportions(
    ternary: TernaryMatrix, layout: LayerLayout | None = None
) -> ProportionReport:
    """Fractions of -1/0/+1 cells, overall and per layer segment."""
    values = ternary.values()
    per_layer: list[tuple[str, str, ClassFractions]] = []
    if layout is not None:
        if layout.n_features != ternary.n_features:
            raise LayoutMismatch(
                f"layout covers [0, {layout.n_features}) but the ternary matrix "
                f"has {ternary.n_features} features"
            )
        for seg in layout.segments:
            per_layer.append(
                (seg.layer_name, seg.kind,
                 _count_classes(values[:, seg.start:seg.end_exclusive]))
            )
    return ProportionReport(overall=_count_classes(values),
                            per_layer=tuple(per_layer))


def write_ternary_matrix(ternary: TernaryMatrix, sink: BinaryIO) -> None:
    sink.write(
        TERNARY_HEADER.pack(
            TERNARY_MAGIC,
            ternary.n_samples,
            ternary.n_features,
            ternary.thresholds.ft_minus,
            ternary.thresholds.ft_plus,
        )
    )
    sink.write(ternary.packed.tobytes())


def read_ternary_matrix(source: BinaryIO) -> TernaryMatrix:
    header = source.read(TERNARY_HEADER.size)
    if len(header) < TERNARY_HEADER.size:
        raise TruncatedPayload(
            f"header is {len(header)} bytes, expected {TERNARY_HEADER.size}"
        )
    magic, n_samples, n_features, ft_minus, ft_plus = TERNARY_HEADER.unpack(header)
    if magic != TERNARY_MAGIC:
        raise BadMagic(f"expected magic {TERNARY_MAGIC!r}, found {magic!r}")
    row_bytes = TERNARY_BYTES_PER_ROW(n_features)
    expected = n_samples * row_bytes
    payload = source.read(expected)
    if len(payload) < expected:
        raise TruncatedPayload(
            f"payload is {len(payload)} bytes, expected {expected}"
        )
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(n_samples, row_bytes)
    ternary = TernaryMatrix(
        n_samples=n_samples,
        n_features=n_features,
        packed=packed.copy(),
        thresholds=Thresholds(ft_minus=float(ft_minus), ft_plus=float(ft_plus)),
    )
    ternary.values()  # reject reserved codes up front
    return ternary


def write_stats_tsv(stats: StandardizationStats, sink) -> None:
    sink.write("# feature_index\tmean\tstddev\n")
    for j in range(stats.n_features):
        sink.write(f"{j}\t{float(stats.means[j])!r}\t{float(stats.stddevs[j])!r}\n")


def read_stats_tsv(source) -> StandardizationStats:
    means: list[float] = []
    stddevs: list[float] = []
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise BadMagic(f"stats line {lineno}: expected 3 fields")
        means.append(float(fields[1]))
        stddevs.append(float(fields[2]))
    return StandardizationStats(means=np.array(means), stddevs=np.array(stddevs))


class ActivationStandardizer(BaseEstimator, TransformerMixin):
    """Estimator facade over :func:`standardize` / :func:`apply_standardization`.

    fit learns per-feature means and population standard deviations;
    transform replays them (constant features become zero columns), so the
    step drops into an sklearn ``Pipeline`` in front of a discretizer.
    """

    def fit(self, X, y=None):
        _, stats = standardize(X)
        self.means_ = stats.means
        self.stddevs_ = stats.stddevs
        return self

    def transform(self, X):
        return apply_standardization(X, self.stats_)

    @property
    def stats_(self) -> StandardizationStats:
        return StandardizationStats(means=self.means_, stddevs=self.stddevs_)


class TernaryDiscretizer(BaseEstimator, TransformerMixin):
    """Stateless threshold transformer returning int8 values in {-1, 0, 1}.

    Use :func:`discretize` when the packed :class:`TernaryMatrix` is needed;
    this transform keeps plain arrays so it composes with the ecosystem.
    """

    def __init__(self, ft_minus: float = DEFAULT_FT_MINUS,
                 ft_plus: float = DEFAULT_FT_PLUS):
        self.ft_minus = ft_minus
        self.ft_plus = ft_plus

    def fit(self, X, y=None):
        self.thresholds_ = Thresholds(ft_minus=self.ft_minus, ft_plus=self.ft_plus)
        return self

    def transform(self, X):
        thresholds = Thresholds(ft_minus=self.ft_minus, ft_plus=self.ft_plus)
        return discretize(X, thresholds).values()
