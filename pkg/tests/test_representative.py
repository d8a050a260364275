import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mode_loop
from visdist import errors, fne, representative
from visdist.representative import (
    PresenceBitset,
    TernaryVector,
    bootstrap_stability,
    build_all_representatives,
    compute_representative,
    presence_set,
)

from conftest import make_rep


def ternary_of(rows):
    return fne.TernaryMatrix.from_values(np.asarray(rows, dtype=np.int8))


class TestMode:
    def test_single_row_is_identity(self):
        rep = compute_representative(ternary_of([[1, -1, 0]]), [0], "s")
        np.testing.assert_array_equal(rep.ternary.values(), [1, -1, 0])

    def test_majority_wins(self):
        rep = compute_representative(
            ternary_of([[1], [1], [-1]]), [0, 1, 2], "s"
        )
        assert rep.ternary.values()[0] == 1

    def test_three_way_tie_resolves_to_zero(self):
        rep = compute_representative(ternary_of([[1], [-1], [0]]), [0, 1, 2], "s")
        assert rep.ternary.values()[0] == 0

    def test_two_way_ties_resolve_to_zero(self):
        # +1/-1 tie, +1/0 tie, -1/0 tie
        rows = np.array(
            [[1, 1, -1], [1, 1, -1], [-1, 0, 0], [-1, 0, 0]], dtype=np.int8
        )
        rep = compute_representative(ternary_of(rows), [0, 1, 2, 3], "s")
        np.testing.assert_array_equal(rep.ternary.values(), [0, 0, 0])

    def test_matches_counting_oracle(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(17, 40))
        rep = compute_representative(ternary_of(rows), range(17), "s")
        expected = [mode_loop(list(rows[:, j])) for j in range(40)]
        np.testing.assert_array_equal(rep.ternary.values(), expected)

    def test_duplication_invariance(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(5, 12))
        base = compute_representative(ternary_of(rows), range(5), "s")
        tripled = compute_representative(
            ternary_of(np.vstack([rows, rows, rows])), range(15), "s"
        )
        assert base.ternary == tripled.ternary

    def test_permutation_invariance(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(9, 12))
        ternary = ternary_of(rows)
        order = rng.permutation(9)
        a = compute_representative(ternary, range(9), "s")
        b = compute_representative(ternary, list(order), "s")
        assert a.ternary == b.ternary

    def test_empty_selection_rejected(self):
        with pytest.raises(errors.EmptySynset):
            compute_representative(ternary_of([[0]]), [], "s")

    def test_out_of_range_rejected(self):
        with pytest.raises(errors.IndexOutOfRange):
            compute_representative(ternary_of([[0]]), [1], "s")

    @settings(max_examples=60, deadline=None)
    @given(
        column=st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=15)
    )
    def test_mode_property_vs_oracle(self, column):
        rows = np.array(column, dtype=np.int8)[:, None]
        rep = compute_representative(ternary_of(rows), range(len(column)), "s")
        assert rep.ternary.values()[0] == mode_loop(column)


class TestPresence:
    def test_basic_mask(self):
        bitset = presence_set(TernaryVector.from_values([1, 0, -1, 1]))
        assert bitset.popcount == 2
        np.testing.assert_array_equal(bitset.indices(), [0, 3])

    def test_all_zero_vector(self):
        bitset = presence_set(TernaryVector.from_values([0, 0, 0]))
        assert bitset.popcount == 0
        assert bitset.indices().size == 0

    def test_popcount_matches_naive_count(self, rng):
        for _ in range(1000):
            m = int(rng.integers(1, 130))
            values = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=m)
            bitset = presence_set(TernaryVector.from_values(values))
            assert bitset.popcount == sum(1 for v in values if v == 1)

    def test_invariant_presence_is_plus_mask(self, rng):
        values = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=77)
        rep = make_rep(values)
        np.testing.assert_array_equal(
            rep.presence.indices(), np.flatnonzero(values == 1)
        )


class TestBuildAll:
    def test_two_disjoint_synsets(self):
        ternary = ternary_of([[1, 0], [0, 1]])
        reps = build_all_representatives(ternary, {"b": [1], "a": [0]})
        assert [r.synset_id for r in reps] == ["a", "b"]
        np.testing.assert_array_equal(reps[0].ternary.values(), [1, 0])

    def test_matches_per_synset_calls(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(300, 16))
        ternary = ternary_of(rows)
        groups = {
            f"n{k:04d}": list(range(k * 3, k * 3 + 3)) for k in range(100)
        }
        reps = build_all_representatives(ternary, groups)
        assert len(reps) == 100
        for rep in reps:
            solo = compute_representative(ternary, groups[rep.synset_id],
                                          rep.synset_id)
            assert rep.ternary == solo.ternary
            assert rep.n_source_samples == solo.n_source_samples

    def test_dimension_preserved_for_every_synset(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(6, 23))
        reps = build_all_representatives(
            ternary_of(rows), {"a": [0, 1], "b": [2, 3, 4], "c": [5]}
        )
        assert all(rep.n_features == 23 for rep in reps)
        for rep in reps:
            assert np.isin(rep.ternary.values(), (-1, 0, 1)).all()


class TestRepresentativeFile:
    def test_roundtrip(self, rng):
        values = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(3, 21))
        reps = [
            make_rep(values[i], synset_id=f"n{i:08d}", n_source_samples=i + 1)
            for i in range(3)
        ]
        sink = io.BytesIO()
        representative.write_representatives(reps, sink)
        back = representative.read_representatives(io.BytesIO(sink.getvalue()))
        assert [r.synset_id for r in back] == [r.synset_id for r in reps]
        assert [r.n_source_samples for r in back] == [1, 2, 3]
        for original, loaded in zip(reps, back):
            assert original.ternary == loaded.ternary
            # presence is recomputed on load, never stored
            assert loaded.presence == PresenceBitset.from_ternary(loaded.ternary)

    def test_bad_magic(self):
        with pytest.raises(errors.BadMagic):
            representative.read_representatives(
                io.BytesIO(b"WRONGXX" + b"\x00" * 8)
            )

    def test_truncated_record(self):
        reps = [make_rep([1, 0, -1], synset_id="n1")]
        sink = io.BytesIO()
        representative.write_representatives(reps, sink)
        with pytest.raises(errors.TruncatedPayload):
            representative.read_representatives(io.BytesIO(sink.getvalue()[:-1]))

    def test_mixed_widths_rejected(self):
        reps = [make_rep([1, 0], synset_id="a"), make_rep([1], synset_id="b")]
        with pytest.raises(errors.DimensionMismatch):
            representative.write_representatives(reps, io.BytesIO())


class TestBootstrapStability:
    def test_identical_rows_are_perfectly_stable(self):
        rows = np.tile(np.array([1, -1, 0, 1], dtype=np.int8), (6, 1))
        report = bootstrap_stability(
            ternary_of(rows), {"a": list(range(6))}, n_resamples=20, seed=1
        )
        assert report == {"a": 0.0}

    def test_deterministic_given_seed(self, rng):
        rows = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(12, 30))
        groups = {"a": list(range(6)), "b": list(range(6, 12))}
        first = bootstrap_stability(ternary_of(rows), groups, 15, seed=9)
        second = bootstrap_stability(ternary_of(rows), groups, 15, seed=9)
        assert first == second
