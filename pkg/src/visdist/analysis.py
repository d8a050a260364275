"""Distance-matrix analytics: correlation, 2-D projection, consistency.

Correlations always run distance-vs-distance (every matrix in this toolkit
stores 1 - similarity), so no sign flipping is needed when comparing the
visual matrix against the lexical ones.

Classical MDS double-centers the squared distances and eigendecomposes the
resulting Gram matrix with the Jacobi solver; negative eigenvalues (the
input need not be Euclidean) are clamped to zero and their mass reported,
never hidden.  PCA over representatives treats ternary values as reals and
works through the sample-side Gram matrix, which keeps the eigenproblem at
S x S instead of M x M.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

import numpy as np
from sklearn.base import BaseEstimator

from .distance import DistanceMatrix
from .errors import (
    DegenerateMatrix,
    InsufficientOverlap,
    TooFewSynsets,
    UnknownSynset,
    ZeroVariance,
)
from .fne import TernaryMatrix
from .lexical import Taxonomy
from .linalg import jacobi_eigh
from .packing import presence_words
from .representative import SynsetRepresentative
from .validation import check_same_length, check_vector


# --- correlation -------------------------------------------------------------

def pearson(x, y) -> float:
    """Product-moment correlation in [-1, 1]."""
    x = check_vector(x, name="x", min_length=2)
    y = check_vector(y, name="y", min_length=2)
    check_same_length(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    var_x = float(dx @ dx)
    var_y = float(dy @ dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ZeroVariance("pearson is undefined for a constant input")
    r = float(dx @ dy) / np.sqrt(var_x * var_y)
    return float(min(1.0, max(-1.0, r)))


def average_ranks(x) -> np.ndarray:
    """Fractional ranks starting at 1; tied values share their mean rank."""
    x = np.asarray(x, dtype=np.float64).ravel()
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    run_starts = np.flatnonzero(
        np.concatenate([[True], sorted_x[1:] != sorted_x[:-1]])
    )
    run_ends = np.concatenate([run_starts[1:], [x.size]])
    run_means = (run_starts + run_ends - 1) / 2.0 + 1.0
    ranks = np.empty(x.size, dtype=np.float64)
    ranks[order] = np.repeat(run_means, run_ends - run_starts)
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average-tied fractional ranks."""
    x = check_vector(x, name="x", min_length=2)
    y = check_vector(y, name="y", min_length=2)
    check_same_length(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def align_matrices(
    a: DistanceMatrix, b: DistanceMatrix
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Condensed distance vectors over the shared synsets, same pair order."""
    shared = sorted(set(a.synset_ids) & set(b.synset_ids))
    if len(shared) < 2:
        raise InsufficientOverlap(
            f"matrices share {len(shared)} synsets; need at least 2"
        )
    index_a = {s: k for k, s in enumerate(a.synset_ids)}
    index_b = {s: k for k, s in enumerate(b.synset_ids)}
    pos_a = np.array([index_a[s] for s in shared], dtype=np.intp)
    pos_b = np.array([index_b[s] for s in shared], dtype=np.intp)
    iu, ju = np.triu_indices(len(shared), k=1)

    def gather(matrix: DistanceMatrix, pos: np.ndarray) -> np.ndarray:
        n = matrix.size
        i = pos[iu].astype(np.int64)
        j = pos[ju].astype(np.int64)
        flat = i * n - i * (i + 1) // 2 + (j - i - 1)
        return matrix.condensed[flat].astype(np.float64)

    return gather(a, pos_a), gather(b, pos_b), shared


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    spearman_rho: float
    n_pairs: int
    shared_ids: int

    def to_json(self) -> str:
        # 12 decimals: stable across summation orders, ample for reporting
        return json.dumps(
            {
                "pearson": round(self.pearson_r, 12),
                "spearman": round(self.spearman_rho, 12),
                "n_pairs": self.n_pairs,
                "shared_ids": self.shared_ids,
            },
            indent=2,
        ) + "\n"


def compare_matrices(a: DistanceMatrix, b: DistanceMatrix) -> CorrelationReport:
    va, vb, shared = align_matrices(a, b)
    return CorrelationReport(
        pearson_r=pearson(va, vb),
        spearman_rho=spearman(va, vb),
        n_pairs=int(va.size),
        shared_ids=len(shared),
    )


# --- 2-D projections ----------------------------------------------------------

@dataclass(frozen=True)
class Projection:
    ids: tuple[str, ...]
    coords: np.ndarray
    method: str
    diagnostics: dict[str, float] = field(default_factory=dict)


def _canonical_signs(coords: np.ndarray) -> np.ndarray:
    """Flip each axis so its largest-magnitude entry is positive."""
    coords = coords.copy()
    for k in range(coords.shape[1]):
        column = coords[:, k]
        pivot = int(np.argmax(np.abs(column)))
        if column[pivot] < 0:
            coords[:, k] = -column
    return coords + 0.0  # normalize -0.0 -> +0.0


def classical_mds(matrix: DistanceMatrix, dims: int = 2) -> Projection:
    """Torgerson scaling of a (not necessarily Euclidean) distance matrix."""
    n = matrix.size
    if n < dims + 1:
        raise TooFewSynsets(f"need >= {dims + 1} synsets for {dims}-D MDS, got {n}")
    d = matrix.square()
    if not d.any():
        raise DegenerateMatrix("all distances are zero")

    d2 = d * d
    row_mean = d2.mean(axis=1, keepdims=True)
    col_mean = d2.mean(axis=0, keepdims=True)
    gram = -0.5 * (d2 - row_mean - col_mean + d2.mean())
    eigenvalues, eigenvectors = jacobi_eigh(gram)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    top = eigenvalues[:dims]
    clamped = np.where(top > 0, top, 0.0)
    coords = _canonical_signs(eigenvectors[:, :dims] * np.sqrt(clamped))

    negative_mass = float(np.abs(eigenvalues[eigenvalues < 0]).sum())
    delta = matrix.condensed.astype(np.float64)
    iu, ju = np.triu_indices(n, k=1)
    embedded = np.sqrt(((coords[iu] - coords[ju]) ** 2).sum(axis=1))
    stress = float(np.sqrt(((delta - embedded) ** 2).sum() / (delta ** 2).sum()))

    return Projection(
        ids=matrix.synset_ids,
        coords=coords,
        method="mds",
        diagnostics={
            "stress": stress,
            "negative_eigenvalue_mass": negative_mass,
        },
    )


def pca_projection(
    reps: Sequence[SynsetRepresentative], dims: int = 2
) -> Projection:
    """PCA scores of representatives, ternary values taken as reals."""
    n = len(reps)
    if n < dims + 1:
        raise TooFewSynsets(
            f"need >= {dims + 1} representatives for {dims}-D PCA, got {n}"
        )
    ordered = sorted(reps, key=lambda rep: rep.synset_id)
    x = np.stack([rep.ternary.values() for rep in ordered]).astype(np.float64)
    x -= x.mean(axis=0)
    gram = x @ x.T
    eigenvalues, eigenvectors = jacobi_eigh(gram)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = np.where(eigenvalues[order] > 0, eigenvalues[order], 0.0)
    eigenvectors = eigenvectors[:, order]
    total = float(eigenvalues.sum())
    if total == 0.0:
        raise DegenerateMatrix("representatives have zero total variance")

    coords = _canonical_signs(eigenvectors[:, :dims] * np.sqrt(eigenvalues[:dims]))
    diagnostics = {
        f"explained_variance_{k + 1}": float(eigenvalues[k] / total)
        for k in range(dims)
    }
    return Projection(
        ids=tuple(rep.synset_id for rep in ordered),
        coords=coords,
        method="pca",
        diagnostics=diagnostics,
    )


def write_projection_csv(projection: Projection, sink: TextIO) -> None:
    diag = ";".join(
        f"{key}={projection.diagnostics[key] + 0.0:.9f}"
        for key in sorted(projection.diagnostics)
    )
    sink.write(f"# method={projection.method}, diag={diag}\n")
    sink.write("synset_id,x,y\n")
    for synset_id, row in zip(projection.ids, projection.coords):
        x, y = (float(row[0]) + 0.0, float(row[1]) + 0.0)
        sink.write(f"{synset_id},{x:.9f},{y:.9f}\n")


# --- presence-set consistency vs taxonomy depth -------------------------------

@dataclass(frozen=True)
class SynsetConsistency:
    synset_id: str
    n_images: int
    consistency: float | None
    depth: int


@dataclass(frozen=True)
class ConsistencyReport:
    """Within-synset presence co-occurrence against taxonomy depth.

    Co-occurrence is operationalized as the mean pairwise Jaccard similarity
    of per-image presence sets; the header records that so downstream readers
    know what the statistic is.
    """

    statistic: str
    per_synset: tuple[SynsetConsistency, ...]
    spearman_rho: float | None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "spearman_rho_vs_depth": self.spearman_rho,
            "per_synset": [
                {
                    "synset_id": s.synset_id,
                    "n_images": s.n_images,
                    "consistency": s.consistency,
                    "depth": s.depth,
                }
                for s in self.per_synset
            ],
        }


def consistency_vs_specificity(
    ternary: TernaryMatrix,
    groups: Mapping[str, Sequence[int]],
    taxonomy: Taxonomy,
) -> ConsistencyReport:
    """Mean pairwise Jaccard of per-image presence sets, per synset, plus the
    Spearman correlation of that statistic with taxonomy depth."""
    for synset_id in groups:
        if synset_id not in taxonomy.nodes:
            raise UnknownSynset(f"synset {synset_id!r} is not in the taxonomy")

    rows: list[SynsetConsistency] = []
    for synset_id in sorted(groups):
        indices = np.asarray(list(groups[synset_id]), dtype=np.intp)
        node_depth = taxonomy.depth(synset_id)
        if indices.size < 2:
            rows.append(SynsetConsistency(synset_id, int(indices.size), None,
                                          node_depth))
            continue
        words = presence_words(ternary.rows(indices))
        popcounts = np.bitwise_count(words).sum(axis=1, dtype=np.int64)
        total = 0.0
        n_pairs = 0
        for i in range(indices.size - 1):
            inter = np.bitwise_count(words[i] & words[i + 1:]).sum(
                axis=1, dtype=np.int64
            )
            union = popcounts[i] + popcounts[i + 1:] - inter
            sims = np.ones(inter.shape, dtype=np.float64)
            nonempty = union > 0
            sims[nonempty] = inter[nonempty] / union[nonempty]
            total += float(sims.sum())
            n_pairs += sims.size
        rows.append(
            SynsetConsistency(synset_id, int(indices.size), total / n_pairs,
                              node_depth)
        )

    defined = [(s.consistency, s.depth) for s in rows if s.consistency is not None]
    rho: float | None = None
    if len(defined) >= 2:
        try:
            rho = spearman([c for c, _ in defined], [d for _, d in defined])
        except ZeroVariance:
            rho = None
    return ConsistencyReport(
        statistic="mean_pairwise_jaccard_of_presence_sets",
        per_synset=tuple(rows),
        spearman_rho=rho,
    )


# --- estimator facades ---------------------------------------------------------

class ClassicalMDS(BaseEstimator):
    """Estimator facade over :func:`classical_mds`.

    fit accepts a DistanceMatrix and exposes ``embedding_``, ``stress_`` and
    the clamped negative-eigenvalue mass.
    """

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X: DistanceMatrix, y=None):
        projection = classical_mds(X, dims=self.n_components)
        self.embedding_ = projection.coords
        self.ids_ = projection.ids
        self.stress_ = projection.diagnostics["stress"]
        self.negative_eigenvalue_mass_ = projection.diagnostics[
            "negative_eigenvalue_mass"
        ]
        return self

    def fit_transform(self, X: DistanceMatrix, y=None) -> np.ndarray:
        return self.fit(X).embedding_


class TernaryPCA(BaseEstimator):
    """Estimator facade over :func:`pca_projection`."""

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X: Sequence[SynsetRepresentative], y=None):
        projection = pca_projection(X, dims=self.n_components)
        self.embedding_ = projection.coords
        self.ids_ = projection.ids
        self.explained_variance_ratio_ = np.array(
            [
                projection.diagnostics[f"explained_variance_{k + 1}"]
                for k in range(self.n_components)
            ]
        )
        return self

    def fit_transform(self, X: Sequence[SynsetRepresentative], y=None) -> np.ndarray:
        return self.fit(X).embedding_
