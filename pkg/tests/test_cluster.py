import json

import numpy as np
import pytest

from oracles import upgma_loop
from visdist import errors
from visdist.cluster import (
    AverageLinkage,
    adjusted_rand_index,
    agglomerative_cluster,
)
from visdist.distance import DistanceMatrix


def matrix_from_square(square, ids=None):
    square = np.asarray(square, dtype=np.float64)
    n = square.shape[0]
    ids = tuple(ids or (f"s{k:03d}" for k in range(n)))
    iu = np.triu_indices(n, k=1)
    return DistanceMatrix(
        synset_ids=ids,
        condensed=square[iu].astype(np.float32),
        metric_name="test",
    )


def random_distance_matrix(rng, n):
    square = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    values = rng.uniform(0.05, 1.0, size=len(iu[0]))
    square[iu] = values
    square += square.T
    return matrix_from_square(square)


class TestUpgma:
    def test_two_points(self):
        dendrogram = agglomerative_cluster(
            matrix_from_square([[0, 0.4], [0.4, 0]])
        )
        assert len(dendrogram.merges) == 1
        merge = dendrogram.merges[0]
        assert (merge.left, merge.right, merge.size) == (0, 1, 2)
        assert abs(merge.height - np.float32(0.4)) < 1e-12

    def test_three_points_hand_case(self):
        # d(a,b) = 0.1, d(a,c) = d(b,c) = 0.9: merge (a,b) first, then c at
        # the unchanged average (0.9 + 0.9) / 2 = 0.9
        square = [[0, 0.1, 0.9], [0.1, 0, 0.9], [0.9, 0.9, 0]]
        dendrogram = agglomerative_cluster(matrix_from_square(square))
        first, second = dendrogram.merges
        assert (first.left, first.right) == (0, 1)
        assert abs(first.height - np.float32(0.1)) < 1e-12
        assert (second.left, second.right) == (2, 3)
        assert abs(second.height - np.float32(0.9)) < 1e-12

    def test_matches_definitional_oracle(self, rng):
        for _ in range(25):
            matrix = random_distance_matrix(rng, 12)
            dendrogram = agglomerative_cluster(matrix)
            expected = upgma_loop(matrix.square().tolist())
            assert len(dendrogram.merges) == len(expected)
            for got, (left, right, height, size) in zip(
                dendrogram.merges, expected
            ):
                assert (got.left, got.right, got.size) == (left, right, size)
                assert abs(got.height - height) < 1e-9

    def test_heights_non_decreasing(self, rng):
        for _ in range(20):
            matrix = random_distance_matrix(rng, 15)
            heights = [m.height for m in agglomerative_cluster(matrix).merges]
            assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))

    def test_tie_breaks_to_smallest_pair(self):
        # all distances equal: first merge must be (0, 1), then (2, 3), ...
        square = np.full((4, 4), 0.5)
        np.fill_diagonal(square, 0.0)
        dendrogram = agglomerative_cluster(matrix_from_square(square))
        assert (dendrogram.merges[0].left, dendrogram.merges[0].right) == (0, 1)
        assert (dendrogram.merges[1].left, dendrogram.merges[1].right) == (2, 3)

    def test_single_synset_rejected(self):
        with pytest.raises(errors.TooFewSynsets):
            DistanceMatrix(
                synset_ids=("a",), condensed=np.array([], dtype=np.float32),
                metric_name="test",
            )


class TestDendrogram:
    def test_json_shape(self, rng):
        matrix = random_distance_matrix(rng, 5)
        dendrogram = agglomerative_cluster(matrix)
        payload = json.loads(dendrogram.to_json())
        assert payload["linkage"] == "average"
        assert payload["ids"] == list(matrix.synset_ids)
        assert len(payload["merges"]) == 4
        left, right, height, size = payload["merges"][0]
        assert isinstance(left, int) and isinstance(size, int)
        assert 0.0 <= height <= 1.0

    def test_newick_parses_shape(self):
        square = [[0, 0.1, 0.9], [0.1, 0, 0.9], [0.9, 0.9, 0]]
        dendrogram = agglomerative_cluster(
            matrix_from_square(square, ids=("a", "b", "c"))
        )
        text = dendrogram.to_newick()
        assert text.endswith(";\n")
        assert text.count("(") == 2
        for leaf in ("a", "b", "c"):
            assert leaf in text

    def test_cut_extremes(self, rng):
        matrix = random_distance_matrix(rng, 6)
        dendrogram = agglomerative_cluster(matrix)
        assert list(dendrogram.cut(1)) == [0] * 6
        assert sorted(dendrogram.cut(6)) == list(range(6))
        labels = dendrogram.cut(3)
        assert len(set(labels.tolist())) == 3

    def test_cut_separates_far_group(self):
        # two tight pairs far apart: k=2 must split them
        square = np.array(
            [
                [0.0, 0.05, 0.9, 0.9],
                [0.05, 0.0, 0.9, 0.9],
                [0.9, 0.9, 0.0, 0.05],
                [0.9, 0.9, 0.05, 0.0],
            ]
        )
        labels = agglomerative_cluster(matrix_from_square(square)).cut(2)
        assert labels[0] == labels[1]
        assert labels[2] == labels[3]
        assert labels[0] != labels[2]


class TestAdjustedRandIndex:
    def test_identical_partitions(self):
        assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_matches_sklearn(self, rng):
        from sklearn.metrics import adjusted_rand_score

        for _ in range(20):
            a = rng.integers(0, 4, size=30)
            b = rng.integers(0, 4, size=30)
            assert abs(
                adjusted_rand_index(a, b) - adjusted_rand_score(a, b)
            ) < 1e-12

    def test_singleton_everything(self):
        assert adjusted_rand_index([0, 1, 2], [2, 0, 1]) == 1.0


class TestAverageLinkageEstimator:
    def test_fit_predict(self, rng):
        matrix = random_distance_matrix(rng, 6)
        model = AverageLinkage(n_clusters=3)
        labels = model.fit_predict(matrix)
        assert len(set(labels.tolist())) == 3
        assert model.get_params() == {"n_clusters": 3}
