"""Average-linkage (UPGMA) agglomerative clustering over a distance matrix.

Clusters are numbered scipy-style: leaves are 0..S-1 in the sorted synset
order of the input matrix, and the cluster created by merge step k gets id
S + k.  At every step the pair of active clusters with the smallest mean
inter-cluster distance merges; exact ties resolve to the smallest (i, j)
cluster-id pair, so the merge sequence is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from .distance import DistanceMatrix
from .errors import TooFewSynsets


class Merge(NamedTuple):
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge sequence over the sorted leaf ids; exactly S-1 merges."""

    ids: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.ids)

    def to_json(self) -> str:
        payload = {
            "linkage": "average",
            "ids": list(self.ids),
            "merges": [
                [m.left, m.right, m.height, m.size] for m in self.merges
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_newick(self) -> str:
        """Newick text with branch lengths parent_height - child_height."""
        n = self.n_leaves
        heights = {i: 0.0 for i in range(n)}
        texts = {i: self.ids[i] for i in range(n)}
        for step, merge in enumerate(self.merges):
            node = n + step
            heights[node] = merge.height
            left_branch = max(merge.height - heights[merge.left], 0.0)
            right_branch = max(merge.height - heights[merge.right], 0.0)
            texts[node] = (
                f"({texts[merge.left]}:{left_branch:.9g},"
                f"{texts[merge.right]}:{right_branch:.9g})"
            )
        return texts[n + len(self.merges) - 1] + ";\n"

    def cut(self, k: int) -> np.ndarray:
        """Labels 0..k-1 after stopping at k clusters; label order follows
        the smallest leaf index in each cluster."""
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        members: dict[int, list[int]] = {i: [i] for i in range(n)}
        for step, merge in enumerate(self.merges[: n - k]):
            members[n + step] = members.pop(merge.left) + members.pop(merge.right)
        clusters = sorted(members.values(), key=min)
        labels = np.empty(n, dtype=np.intp)
        for label, leaves in enumerate(clusters):
            labels[leaves] = label
        return labels


def agglomerative_cluster(
    matrix: DistanceMatrix, linkage: str = "average"
) -> Dendrogram:
    """UPGMA merge sequence for a condensed distance matrix."""
    if linkage != "average":
        raise ValueError(f"only average linkage is supported, got {linkage!r}")
    n = matrix.size
    if n < 2:
        raise TooFewSynsets(f"clustering needs >= 2 synsets, got {n}")

    work = matrix.square()
    np.fill_diagonal(work, np.inf)
    ids = np.arange(n, dtype=np.intp)  # active cluster ids, ascending
    sizes = np.ones(n, dtype=np.float64)
    merges: list[Merge] = []

    for step in range(n - 1):
        m = work.shape[0]
        flat = int(np.argmin(work))
        i, j = divmod(flat, m)
        if i > j:  # first occurrence is always upper-triangle, but be safe
            i, j = j, i
        height = float(work[i, j])
        merged_size = sizes[i] + sizes[j]
        merges.append(
            Merge(int(ids[i]), int(ids[j]), height, int(merged_size))
        )

        # average-linkage update against every other active cluster
        new_row = (sizes[i] * work[i, :] + sizes[j] * work[j, :]) / merged_size
        keep = np.ones(m, dtype=bool)
        keep[[i, j]] = False
        new_row = new_row[keep]

        work = work[np.ix_(keep, keep)]
        work = np.pad(work, ((0, 1), (0, 1)), constant_values=np.inf)
        work[-1, :-1] = new_row
        work[:-1, -1] = new_row

        ids = np.append(ids[keep], n + step)
        sizes = np.append(sizes[keep], merged_size)

    return Dendrogram(ids=matrix.synset_ids, merges=tuple(merges))


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Partition agreement corrected for chance; 1.0 for identical partitions."""
    labels_a = np.asarray(labels_a).ravel()
    labels_b = np.asarray(labels_b).ravel()
    if labels_a.shape != labels_b.shape:
        raise ValueError("label vectors differ in length")
    n = labels_a.size
    _, a_codes = np.unique(labels_a, return_inverse=True)
    _, b_codes = np.unique(labels_b, return_inverse=True)
    contingency = np.zeros((a_codes.max() + 1, b_codes.max() + 1), dtype=np.int64)
    np.add.at(contingency, (a_codes, b_codes), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(contingency).sum()
    sum_rows = comb2(contingency.sum(axis=1)).sum()
    sum_cols = comb2(contingency.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


class AverageLinkage(BaseEstimator):
    """Estimator facade over :func:`agglomerative_cluster`.

    fit takes a DistanceMatrix; ``labels_`` holds the partition after
    cutting the merge tree at ``n_clusters``.
    """

    def __init__(self, n_clusters: int = 2):
        self.n_clusters = n_clusters

    def fit(self, X: DistanceMatrix, y=None):
        self.dendrogram_ = agglomerative_cluster(X)
        self.labels_ = self.dendrogram_.cut(self.n_clusters)
        return self

    def fit_predict(self, X: DistanceMatrix, y=None) -> np.ndarray:
        return self.fit(X).labels_
