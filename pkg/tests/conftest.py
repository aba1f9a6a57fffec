import itertools

import pytest
from hypothesis import HealthCheck, settings

from pimgraph.graph import from_edges, normalize_degree_order

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def complete_graph(n):
    return from_edges(n, list(itertools.combinations(range(n), 2)))


def path_graph(n):
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


@pytest.fixture
def k4():
    return normalize_degree_order(complete_graph(4))[0]


@pytest.fixture
def k5():
    return normalize_degree_order(complete_graph(5))[0]


@pytest.fixture
def p3():
    return normalize_degree_order(path_graph(3))[0]
