import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optimal_wls.index_sets import (IndexSet, StructureError, degree_profile,
                                    index_set_for, is_downward_closed, nested_sequence)


class TestDownwardClosed:
    def test_examples(self):
        assert is_downward_closed([(0, 0), (1, 0), (0, 1)])
        assert not is_downward_closed([(0, 0), (2, 0)])
        assert is_downward_closed([(0,)])

    def test_mixed_dimensions(self):
        with pytest.raises(StructureError):
            is_downward_closed([(0, 0), (0,)])

    def test_indirect_hole(self):
        assert not is_downward_closed([(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)])


class TestIndexSet:
    def test_rejects_bad_sets(self):
        with pytest.raises(StructureError):
            IndexSet([(0, 0), (2, 0)])
        with pytest.raises(StructureError):
            IndexSet([])
        with pytest.raises(StructureError):
            IndexSet([(0,), (0,)])
        with pytest.raises(StructureError):
            IndexSet([(0,), (-1,)])

    def test_order(self):
        s = IndexSet([(0, 2), (1, 1), (2, 0), (0, 1), (1, 0), (0, 0)])
        assert s.members == ((0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2))
        assert s.position((0, 1)) == 3

    def test_json_round_trip(self, tmp_path):
        s = IndexSet.total_degree(3, 2)
        p = tmp_path / "set.json"
        p.write_text(s.to_json())
        assert IndexSet.load(p) == s
        assert s.m == 10

    def test_array_is_read_only(self):
        with pytest.raises(ValueError):
            IndexSet([(0,), (1,)]).array[0, 0] = 3


class TestDegreeProfile:
    def test_examples(self):
        assert degree_profile(IndexSet([(0, 0), (1, 0), (0, 1)])) == ((1, 1), 1)
        assert degree_profile(IndexSet([(k,) for k in range(7)])) == ((6,), 6)
        assert degree_profile(IndexSet([(0, 0), (1, 0), (2, 0)])) == ((2, 0), 2)


class TestNestedSequence:
    def test_one_dimensional(self):
        seq = nested_sequence(1, 3)
        assert [s.members for s in seq] == [((0,),), ((0,), (1,)), ((0,), (1,), (2,))]

    def test_two_dimensional_lex(self):
        seq = nested_sequence(2, 3)
        assert [set(s.members) for s in seq] == [{(0, 0)}, {(0, 0), (1, 0)},
                                                 {(0, 0), (1, 0), (0, 1)}]

    def test_random_is_deterministic(self):
        a = nested_sequence(2, 4, "random_admissible", seed=7)
        b = nested_sequence(2, 4, "random_admissible", seed=7)
        assert a == b

    def test_total_degree_fills_levels(self):
        assert index_set_for(3, 10) == IndexSet.total_degree(3, 2)

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            nested_sequence(2, 3, "greedy")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 25),
           st.sampled_from(["total_degree_lex", "random_admissible"]), st.integers(0, 99))
    def test_chain_properties(self, d, m, strategy, seed):
        seq = nested_sequence(d, m, strategy, seed)
        assert len(seq) == m
        for j, s in enumerate(seq, start=1):
            assert s.m == j
            assert is_downward_closed(s.members)
            assert (0,) * d in s
        for a, b in zip(seq, seq[1:]):
            assert set(a.members) < set(b.members)
            assert len(set(b.members) - set(a.members)) == 1

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 50))
    def test_strategies_coincide_in_one_dimension(self, m, seed):
        a = nested_sequence(1, m, "total_degree_lex")
        b = nested_sequence(1, m, "random_admissible", seed)
        assert a == b
        assert a[-1].members == tuple((k,) for k in range(m))

    def test_lex_is_total_degree_graded(self):
        s = index_set_for(4, 30)
        degrees = np.sort(s.array.sum(axis=1))
        # every complete level below the top one is present
        assert degrees.max() - 1 <= 2
        assert np.count_nonzero(degrees <= 2) == 15
