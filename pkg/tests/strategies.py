"""Hypothesis strategies shared across test modules."""

from hypothesis import strategies as st

from pimgraph.graph import from_edges, normalize_degree_order


@st.composite
def small_graphs(draw, max_n=12, normalized=True):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = from_edges(n, [p for p, k in zip(pairs, keep) if k])
    return normalize_degree_order(g)[0] if normalized else g


sorted_sets = st.lists(st.integers(0, 60), max_size=30, unique=True).map(sorted)
