import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import distance_loop, jaccard_distance_sets, pair_counts_loop
from visdist import distance, errors
from visdist.distance import (
    DistanceMatrix,
    distance_matrix,
    pair_counts,
    pair_distances,
    presence_matrix,
    read_distance_matrix,
    visual_distance,
    visual_similarity,
    write_distance_matrix,
)

from conftest import make_rep, random_reps


class TestPairCounts:
    def test_worked_example(self):
        a = make_rep([1, 1, 0, -1], "a")
        b = make_rep([1, -1, 1, 0], "b")
        counts = pair_counts(a, b)
        assert counts == distance.PairCounts(
            c_1_1=1, c_1_0=0, c_1_m1=1, c_0_1=1, c_m1_1=0
        )
        oracle = pair_counts_loop([1, 1, 0, -1], [1, -1, 1, 0])
        assert counts._asdict() == oracle

    def test_identical_representatives(self):
        values = [1, 0, 1, -1, 1]
        counts = pair_counts(make_rep(values, "a"), make_rep(values, "b"))
        assert counts.c_1_1 == 3
        assert (counts.c_1_0, counts.c_1_m1, counts.c_0_1, counts.c_m1_1) == (
            0, 0, 0, 0,
        )

    def test_all_minus_versus_all_plus(self):
        counts = pair_counts(make_rep([-1] * 8, "a"), make_rep([1] * 8, "b"))
        assert counts.c_m1_1 == 8
        assert (counts.c_1_1, counts.c_1_0, counts.c_1_m1, counts.c_0_1) == (
            0, 0, 0, 0,
        )

    def test_marginal_invariants(self, rng):
        for _ in range(50):
            a = make_rep(rng.choice([-1, 0, 1], size=37), "a")
            b = make_rep(rng.choice([-1, 0, 1], size=37), "b")
            counts = pair_counts(a, b)
            assert (
                counts.c_1_1 + counts.c_1_0 + counts.c_1_m1
                == a.presence.popcount
            )
            assert (
                counts.c_1_1 + counts.c_0_1 + counts.c_m1_1
                == b.presence.popcount
            )

    def test_dimension_mismatch(self):
        with pytest.raises(errors.DimensionMismatch):
            pair_counts(make_rep([1], "a"), make_rep([1, 0], "b"))


class TestScalarSimilarity:
    def test_worked_example(self):
        a = make_rep([1, 1, 0, -1], "a")
        b = make_rep([1, -1, 1, 0], "b")
        assert visual_similarity(a, b) == 1 / 3
        assert visual_distance(a, b) == 1 - 1 / 3
        assert visual_distance(a, b) == distance_loop([1, 1, 0, -1], [1, -1, 1, 0])
        assert abs(visual_distance(a, b) - 2 / 3) < 1e-15

    def test_identical_is_similarity_one(self):
        rep = make_rep([1, 0, -1, 1], "a")
        assert visual_similarity(rep, rep) == 1.0
        assert visual_distance(rep, rep) == 0.0

    def test_disjoint_presence_is_zero(self):
        a = make_rep([1, 0, 0], "a")
        b = make_rep([0, 1, 0], "b")
        assert visual_similarity(a, b) == 0.0
        assert visual_distance(a, b) == 1.0

    def test_both_empty_presence_is_similarity_one(self):
        a = make_rep([0, -1, 0], "a")
        b = make_rep([-1, 0, 0], "b")
        assert visual_similarity(a, b) == 1.0
        assert visual_distance(a, b) == 0.0

    def test_identity_of_indiscernibles_fails(self):
        # same presence set, different -1/0 pattern: distance 0, unequal vectors
        a = make_rep([1, 0, -1, 0], "a")
        b = make_rep([1, -1, 0, 0], "b")
        assert a.ternary != b.ternary
        assert visual_distance(a, b) == 0.0

    def test_distance_ignores_minus_versus_zero(self, rng):
        values = rng.choice([-1, 0, 1], size=64)
        a = make_rep(values, "a")
        mutated = values.copy()
        mutated[mutated == -1] = 0
        b = make_rep(mutated, "b")
        probe = make_rep(rng.choice([-1, 0, 1], size=64), "p")
        assert visual_distance(a, probe) == visual_distance(b, probe)

    @settings(max_examples=100, deadline=None)
    @given(
        values=st.lists(
            st.tuples(st.sampled_from([-1, 0, 1]), st.sampled_from([-1, 0, 1])),
            min_size=1,
            max_size=64,
        )
    )
    def test_matches_loop_oracle_and_jaccard(self, values):
        va = [p[0] for p in values]
        vb = [p[1] for p in values]
        a, b = make_rep(va, "a"), make_rep(vb, "b")
        assert visual_distance(a, b) == distance_loop(va, vb)
        assert visual_distance(a, b) == jaccard_distance_sets(va, vb)


class TestKernel:
    def test_kernel_equals_scalar_path_exactly(self, rng):
        reps = random_reps(rng, 60, 96)
        matrix = distance_matrix(reps)
        for i in range(60):
            for j in range(i + 1, 60):
                expected = np.float32(visual_distance(reps[i], reps[j]))
                assert matrix.condensed[matrix.index(i, j)] == expected

    def test_pair_distances_vectorized(self, rng):
        reps = random_reps(rng, 30, 50)
        words = presence_matrix(reps)
        idx_a = rng.integers(0, 30, size=200)
        idx_b = rng.integers(0, 30, size=200)
        got = pair_distances(words, idx_a, idx_b)
        for k in range(200):
            expected = visual_distance(reps[idx_a[k]], reps[idx_b[k]])
            assert got[k] == expected

    def test_two_identical_reps(self):
        reps = [make_rep([1, 0, 1], "a"), make_rep([1, 0, 1], "b")]
        matrix = distance_matrix(reps)
        np.testing.assert_array_equal(matrix.condensed, [0.0])

    def test_three_disjoint_presence_sets(self):
        reps = [
            make_rep([1, 0, 0], "a"),
            make_rep([0, 1, 0], "b"),
            make_rep([0, 0, 1], "c"),
        ]
        matrix = distance_matrix(reps)
        np.testing.assert_array_equal(matrix.condensed, [1.0, 1.0, 1.0])

    def test_matches_naive_double_loop(self, rng):
        reps = random_reps(rng, 50, 512)
        matrix = distance_matrix(reps)
        cursor = 0
        for i in range(50):
            va = list(reps[i].ternary.values())
            for j in range(i + 1, 50):
                vb = list(reps[j].ternary.values())
                assert matrix.condensed[cursor] == np.float32(
                    distance_loop(va, vb)
                )
                cursor += 1

    def test_thread_counts_agree_bitwise(self, rng):
        reps = random_reps(rng, 40, 200)
        single = distance_matrix(reps, threads=1)
        multi = distance_matrix(reps, threads=4)
        assert single.condensed.tobytes() == multi.condensed.tobytes()

    def test_unsorted_input_is_sorted(self, rng):
        reps = random_reps(rng, 10, 32)
        shuffled = [reps[i] for i in rng.permutation(10)]
        assert distance_matrix(shuffled).synset_ids == tuple(
            r.synset_id for r in reps
        )

    def test_too_few_synsets(self):
        with pytest.raises(errors.TooFewSynsets):
            distance_matrix([make_rep([1], "a")])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(errors.DuplicateSynsetId):
            distance_matrix([make_rep([1], "a"), make_rep([0], "a")])

    def test_mixed_feature_counts_rejected(self):
        with pytest.raises(errors.DimensionMismatch):
            distance_matrix([make_rep([1], "a"), make_rep([1, 0], "b")])


class TestMetricAxioms:
    def test_symmetry_exact(self, rng):
        reps = random_reps(rng, 40, 128)
        words = presence_matrix(reps)
        idx_a = rng.integers(0, 40, size=2000)
        idx_b = rng.integers(0, 40, size=2000)
        forward = pair_distances(words, idx_a, idx_b)
        backward = pair_distances(words, idx_b, idx_a)
        assert np.array_equal(forward, backward)

    def test_range(self, rng):
        reps = random_reps(rng, 40, 128)
        matrix = distance_matrix(reps)
        assert matrix.condensed.min() >= 0.0
        assert matrix.condensed.max() <= 1.0

    def test_triangle_inequality(self, rng):
        reps = random_reps(rng, 60, 64)
        matrix = distance_matrix(reps)
        d = matrix.square()
        for _ in range(5000):
            i, j, k = rng.integers(0, 60, size=3)
            assert d[i, j] <= d[i, k] + d[k, j] + 1e-9

    def test_self_distance_zero(self, rng):
        reps = random_reps(rng, 10, 64)
        for rep in reps:
            assert visual_distance(rep, rep) == 0.0


class TestCondensedLayout:
    def test_index_formula(self):
        matrix = DistanceMatrix(
            synset_ids=("a", "b", "c", "d"),
            condensed=np.array([1, 2, 3, 4, 5, 6], dtype=np.float32) / 10.0,
            metric_name="vd",
        )
        # spec layout: (i, j) at i*S - i(i+1)/2 + (j-i-1)
        assert matrix.index(0, 1) == 0
        assert matrix.index(0, 3) == 2
        assert matrix.index(1, 2) == 3
        assert matrix.index(2, 3) == 5
        assert matrix.value(2, 3) == np.float32(0.6)
        assert matrix.value(3, 2) == np.float32(0.6)
        assert matrix.value(1, 1) == 0.0

    def test_square_expansion(self):
        matrix = DistanceMatrix(
            synset_ids=("a", "b", "c"),
            condensed=np.array([0.1, 0.2, 0.3], dtype=np.float32),
            metric_name="vd",
        )
        square = matrix.square()
        assert square.shape == (3, 3)
        assert np.array_equal(square, square.T)
        assert np.all(np.diag(square) == 0)

    def test_ids_must_be_sorted(self):
        with pytest.raises(errors.DuplicateSynsetId):
            DistanceMatrix(
                synset_ids=("b", "a"),
                condensed=np.array([0.5], dtype=np.float32),
                metric_name="vd",
            )

    def test_values_must_be_bounded(self):
        with pytest.raises(ValueError):
            DistanceMatrix(
                synset_ids=("a", "b"),
                condensed=np.array([1.5], dtype=np.float32),
                metric_name="vd",
            )


class TestMatrixFile:
    def test_roundtrip(self, rng):
        reps = random_reps(rng, 8, 40)
        matrix = distance_matrix(reps, parameters={"ft_minus": "-0.25"})
        sink = io.BytesIO()
        write_distance_matrix(matrix, sink)
        back = read_distance_matrix(io.BytesIO(sink.getvalue()))
        assert back.synset_ids == matrix.synset_ids
        assert back.metric_name == "vd"
        assert back.parameters == matrix.parameters
        assert back.condensed.tobytes() == matrix.condensed.tobytes()

    def test_bad_magic(self):
        with pytest.raises(errors.BadMagic):
            read_distance_matrix(io.BytesIO(b"NOPE!!" + b"\x00" * 10))

    def test_truncated(self, rng):
        reps = random_reps(rng, 4, 16)
        sink = io.BytesIO()
        write_distance_matrix(distance_matrix(reps), sink)
        with pytest.raises(errors.TruncatedPayload):
            read_distance_matrix(io.BytesIO(sink.getvalue()[:-2]))
