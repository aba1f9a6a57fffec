import io
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pimgraph.graph import (CsrGraph, GraphFormatError, check_csr, from_edges, gen_circulant_graph,
                            gen_er_graph, gen_skewed_graph, load_csr_binary, load_edge_list,
                            normalize_degree_order, write_csr, write_edge_list)

from .strategies import small_graphs


def test_edge_list_triangle():
    g = load_edge_list(io.StringIO("0 1\n1 2\n2 0\n"))
    assert g.num_vertices == 3
    assert g.num_edges == 6
    assert g.degrees.tolist() == [2, 2, 2]


def test_edge_list_dedups_and_drops_self_loops():
    g = load_edge_list(io.StringIO("# comment\n0 1\n1 0\n1 1\n"))
    assert g.num_vertices == 2
    assert g.adjacency == ([1], [0])


def test_edge_list_compacts_sparse_ids():
    g = load_edge_list(io.StringIO("10 30\n30 20\n"))
    assert g.num_vertices == 3
    assert g.adjacency == ([2], [2], [0, 1])


@pytest.mark.parametrize("text", ["", "# nothing\n", "0\n", "0 x\n"])
def test_edge_list_rejects_bad_input(text):
    with pytest.raises(GraphFormatError):
        load_edge_list(io.StringIO(text))


def test_edge_list_error_names_line():
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edge_list(io.StringIO("0 1\n0 a\n"))


def test_star_normalizes_hub_to_zero():
    g = from_edges(5, [(4, 0), (4, 1), (4, 2), (4, 3)])
    h, relabel = normalize_degree_order(g)
    assert h.degree(0) == 4
    assert relabel.new_to_old[0] == 4
    # ties keep ascending original id
    assert relabel.new_to_old[1:].tolist() == [0, 1, 2, 3]


def test_check_csr_catches_asymmetry():
    with pytest.raises(GraphFormatError, match="symmetric"):
        CsrGraph(2, np.array([0, 1, 1]), np.array([1]))


@pytest.mark.parametrize("row_ptr,col_idx,msg", [
    ([0, 1], [0], "self-loop"),
    ([1, 1], [], "row_ptr\\[0\\]"),
    ([0, 2, 1], [1, 0], "monotone"),
    ([0, 1, 2], [1], "col_idx"),
    ([0, 1, 2], [2, 0], "range"),
    ([0, 2, 3, 4], [2, 1, 0, 0], "ascending"),
])
def test_check_csr_rejects(row_ptr, col_idx, msg):
    with pytest.raises(GraphFormatError, match=msg):
        check_csr(len(row_ptr) - 1, np.array(row_ptr), np.array(col_idx))


def test_csr_binary_layout():
    g = from_edges(2, [(0, 1)])
    buf = io.BytesIO()
    write_csr(g, buf)
    raw = buf.getvalue()
    assert raw == struct.pack("<QQQQII", 2, 0, 1, 2, 1, 0)


def test_csr_binary_truncated():
    buf = io.BytesIO()
    write_csr(from_edges(3, [(0, 1), (1, 2)]), buf)
    for cut in (4, 12, len(buf.getvalue()) - 2):
        with pytest.raises(GraphFormatError, match="truncated"):
            load_csr_binary(io.BytesIO(buf.getvalue()[:cut]))


@given(small_graphs(normalized=False))
def test_csr_roundtrip(g):
    buf = io.BytesIO()
    write_csr(g, buf)
    buf.seek(0)
    assert load_csr_binary(buf) == g


@given(small_graphs(normalized=False))
def test_edge_list_roundtrip_preserves_edges(g):
    buf = io.StringIO()
    write_edge_list(g, buf)
    if g.num_edges == 0:
        return
    h = load_edge_list(io.StringIO(buf.getvalue()))
    assert h.num_edges == g.num_edges
    assert sorted(h.degrees.tolist()) == sorted(d for d in g.degrees.tolist() if d)


@given(small_graphs(normalized=False))
def test_normalize_properties(g):
    h, rl = normalize_degree_order(g)
    assert h.is_degree_sorted()
    assert h.num_edges == g.num_edges
    assert np.array_equal(rl.old_to_new[rl.new_to_old], np.arange(g.num_vertices))
    # edges map one-to-one under the relabeling
    old = {tuple(sorted(e)) for e in rl.old_to_new[g.edges()].tolist()}
    assert old == {tuple(e) for e in h.edges().tolist()}
    # idempotent up to the identity
    assert normalize_degree_order(h)[0] == h


@given(st.integers(1, 40), st.floats(0, 1), st.integers(0, 2**32))
def test_er_generator_deterministic_and_sorted(n, p, seed):
    a = gen_er_graph(n, p, seed)
    assert a == gen_er_graph(n, p, seed)
    assert a.is_degree_sorted()


def test_er_extremes():
    assert gen_er_graph(6, 0.0, 1).num_edges == 0
    assert gen_er_graph(6, 1.0, 1).num_edges == 30


def test_skewed_generator_has_hub_clique():
    g = gen_skewed_graph(200, 20, seed=3)
    assert g.is_degree_sorted()
    assert g.max_degree >= 20
    assert g == gen_skewed_graph(200, 20, seed=3)
    a = g.dense()
    assert a[:21, :21].sum() == 21 * 20


def test_circulant_is_regular():
    g = gen_circulant_graph(50, 3)
    assert set(g.degrees.tolist()) == {6}
    with pytest.raises(ValueError):
        gen_circulant_graph(6, 3)


@pytest.mark.parametrize("args", [(0, 0.5, 1), (5, 1.5, 1)])
def test_er_rejects_bad_args(args):
    with pytest.raises(ValueError):
        gen_er_graph(*args)
