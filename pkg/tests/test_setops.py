from hypothesis import given, strategies as st

from pimgraph.setops import (bounded_intersect, bounded_subtract, intersect_count, is_strictly_ascending,
                             subtract_count)

from .strategies import sorted_sets

bounds = st.one_of(st.none(), st.integers(-1, 62))


def test_intersect_example():
    assert bounded_intersect([1, 3, 5, 7], [3, 4, 5, 8]) == [3, 5]
    assert bounded_intersect([1, 3, 5, 7], [3, 4, 5, 8], bound=5) == [3]


def test_subtract_example():
    assert bounded_subtract([1, 3, 5, 7], [3, 7]) == [1, 5]
    assert bounded_subtract([1, 3, 5, 7], [3, 7], bound=6) == [1, 5]
    assert bounded_subtract([], [1]) == []


def test_touched_counts_merge_steps():
    out, touched = intersect_count([1, 2, 3], [2])
    assert out == [2]
    assert touched == 3


@given(sorted_sets, sorted_sets, bounds)
def test_intersect_matches_sets(a, b, bound):
    got = bounded_intersect(a, b, bound)
    want = sorted(x for x in set(a) & set(b) if bound is None or x < bound)
    assert got == want
    assert is_strictly_ascending(got)


@given(sorted_sets, sorted_sets, bounds)
def test_subtract_matches_sets(a, b, bound):
    got = bounded_subtract(a, b, bound)
    want = sorted(x for x in set(a) - set(b) if bound is None or x < bound)
    assert got == want


@given(sorted_sets, sorted_sets, bounds)
def test_touched_is_bounded(a, b, bound):
    for fn in (intersect_count, subtract_count):
        _, t = fn(a, b, bound)
        assert 0 <= t <= len(a) + len(b)


@given(sorted_sets, sorted_sets)
def test_intersect_commutes(a, b):
    assert bounded_intersect(a, b) == bounded_intersect(b, a)
