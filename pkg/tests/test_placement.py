import numpy as np
import pytest
from hypothesis import given, strategies as st

from pimgraph.graph import from_edges, gen_er_graph
from pimgraph.memory import PimTopology
from pimgraph.placement import (PlacementError, apply_duplication, auto_budget, duplication_boundary,
                                place_round_robin, resolve_owner)

from .strategies import small_graphs

TWO = PimTopology(num_channels=2, bank_groups_per_channel=1, banks_per_channel=2, capacity_bytes=1 << 16)


@pytest.fixture
def g5():
    return from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)])


def test_round_robin_owners(g5):
    p = place_round_robin(g5, TWO)
    assert p.owner.tolist() == [0, 1, 0, 1, 0]
    assert int(p.bytes_used.sum()) == 4 * g5.num_edges
    assert p.dup_boundary.tolist() == [0, 0]


def test_round_robin_identity_owner():
    g = gen_er_graph(128, 0.05, 1)
    assert place_round_robin(g, PimTopology()).owner.tolist() == list(range(128))


def test_unknown_mapping(g5):
    with pytest.raises(ValueError):
        place_round_robin(g5, TWO, "striped")


def test_capacity_overflow():
    tiny = PimTopology(num_channels=2, bank_groups_per_channel=1, banks_per_channel=2, capacity_bytes=256)
    g = from_edges(60, [(0, v) for v in range(1, 60)])
    with pytest.raises(PlacementError):
        place_round_robin(g, tiny)


@pytest.mark.parametrize("budget,want", [(8, 1), (0, 0), (14, 4), (100, 4), (9, 2)])
def test_duplication_boundary_sizes(budget, want):
    assert duplication_boundary([5, 4, 3, 2], budget) == want


@given(small_graphs(), st.integers(0, 400), st.integers(0, 400))
def test_duplication_boundary_monotone_and_greedy(g, m1, m2):
    lo, hi = sorted((m1, m2))
    a, b = duplication_boundary(g, lo), duplication_boundary(g, hi)
    assert a <= b
    sizes = (4 * g.degrees).tolist()
    assert sum(sizes[:a]) <= lo
    if a < g.num_vertices:
        assert sum(sizes[:a + 1]) > lo


def test_full_duplication_two_units(g5):
    p = place_round_robin(g5, TWO)
    d = apply_duplication(p, g5, 5, TWO)
    assert d.dup_boundary.tolist() == [5, 5]
    for unit in range(2):
        assert all(resolve_owner(d, unit, v) == (unit, True) for v in range(5))
    assert (d.bytes_used == p.bytes_used + 4 * g5.num_edges).all()
    assert d.duplicated_bytes == 2 * 4 * g5.num_edges
    assert d.copy_cycles > 0


def test_zero_duplication_is_identity(g5):
    p = place_round_robin(g5, TWO)
    assert apply_duplication(p, g5, 0, TWO) is p


def test_duplication_over_budget():
    tiny = PimTopology(num_channels=2, bank_groups_per_channel=1, banks_per_channel=2, capacity_bytes=512)
    g = from_edges(40, [(i, j) for i in range(8) for j in range(i + 1, 8)])
    p = place_round_robin(g, tiny)
    with pytest.raises(PlacementError):
        apply_duplication(p, g, 8, tiny)


def test_resolve_owner_rules(g5):
    p = apply_duplication(place_round_robin(g5, TWO), g5, 2, TWO)
    assert resolve_owner(p, 1, 1) == (1, True)
    assert resolve_owner(p, 1, 4) == (0, False)
    assert resolve_owner(p, 0, 4) == (0, True)


def test_auto_budget_fits():
    g = gen_er_graph(300, 0.1, 2)
    t = PimTopology()
    p = place_round_robin(g, t)
    vb = duplication_boundary(g, auto_budget(p, t))
    assert vb == g.num_vertices
    d = apply_duplication(p, g, vb, t)
    assert np.all(d.bytes_used <= t.unit_capacity_bytes)
