import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twsdd.circuit import UndirectedGraph
from twsdd.errors import CapacityError, DomainError, ParseError
from twsdd.treedec import (TreeDecomposition, decomposition_from_order, exact_decompose,
                           exact_treewidth, make_nice, min_fill_decompose, parse_pace_td,
                           write_pace_td)


@st.composite
def graphs(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return UndirectedGraph(n, edges)


def brute_treewidth(g):
    """Minimum over all elimination orders of the largest eliminated clique minus one."""
    best = g.n
    for order in itertools.permutations(range(g.n)):
        adj = [set(a) - {v} for v, a in enumerate(g.adj)]
        width = 0
        for v in order:
            width = max(width, len(adj[v]))
            for a in adj[v]:
                adj[a] |= adj[v] - {a}
                adj[a].discard(v)
        best = min(best, width)
    return best


def check_decomposition(td, g):
    """Independent check of the three tree-decomposition properties."""
    for u, v in g.edges():
        assert any(u in b and v in b for b in td.bags), (u, v)
    for v in range(g.n):
        holders = {t for t, b in enumerate(td.bags) if v in b}
        assert holders, v
        # holders induce a connected subtree: exactly one holder lacks a holding parent
        assert sum(1 for t in holders if td.parent[t] not in holders) == 1


def grid(r, c):
    g = UndirectedGraph(r * c)
    for i in range(r):
        for j in range(c):
            if i + 1 < r:
                g.add_edge(i * c + j, (i + 1) * c + j)
            if j + 1 < c:
                g.add_edge(i * c + j, i * c + j + 1)
    return g


def clique(n):
    return UndirectedGraph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


@settings(max_examples=40, deadline=None)
@given(graphs())
def test_exact_treewidth_matches_all_orders(g):
    assert exact_treewidth(g) == brute_treewidth(g)
    td = exact_decompose(g)
    check_decomposition(td, g)
    assert td.width == exact_treewidth(g)


@settings(max_examples=80)
@given(graphs(9))
def test_min_fill_is_valid_and_not_below_optimum(g):
    td = min_fill_decompose(g)
    check_decomposition(td, g)
    assert td.is_valid(g)
    if g.n <= 8:
        assert td.width >= exact_treewidth(g)


@settings(max_examples=80)
@given(graphs(9))
def test_nice_form_preserves_width_and_validity(g):
    td = min_fill_decompose(g)
    ntd = make_nice(td, g)
    assert ntd.problems(g) == []
    check_decomposition(ntd, g)
    assert ntd.width == td.width
    assert not ntd.bags[ntd.root]
    assert set(ntd.forget_node) == set(range(g.n))


@settings(max_examples=40)
@given(graphs(8))
def test_pace_round_trip(g):
    td = min_fill_decompose(g)
    back = parse_pace_td(write_pace_td(td, g.n))
    assert back.is_valid(g) and back.width == td.width


def test_known_treewidths():
    assert exact_treewidth(clique(5)) == 4
    assert min_fill_decompose(clique(5)).width == 4
    cycle = UndirectedGraph(5, [(i, (i + 1) % 5) for i in range(5)])
    assert exact_treewidth(cycle) == 2
    # a 3x3 grid has treewidth 3
    assert exact_treewidth(grid(3, 3)) == 3
    assert min_fill_decompose(grid(3, 3)).width == 3
    path = UndirectedGraph(4, [(0, 1), (1, 2), (2, 3)])
    assert exact_treewidth(path) == 1


def test_disconnected_graph_gives_one_tree():
    g = UndirectedGraph(4, [(0, 1), (2, 3)])
    td = min_fill_decompose(g)
    assert td.is_valid(g) and td.width == 1


def test_invalid_decomposition_detected():
    g = UndirectedGraph(3, [(0, 1), (1, 2)])
    bad = TreeDecomposition([{0, 1}, {2}], [[1], []])
    assert any("not covered" in p for p in bad.problems(g))
    split = TreeDecomposition([{0}, {1, 2}, {0, 1}], [[1], [2], []])
    assert any("not connected" in p for p in split.problems(g))
    with pytest.raises(DomainError):
        make_nice(bad, g)


def test_exact_capacity():
    with pytest.raises(CapacityError):
        exact_treewidth(UndirectedGraph(20), limit=14)


def test_elimination_order_validation():
    with pytest.raises(DomainError):
        decomposition_from_order(UndirectedGraph(3), [0, 1])


@pytest.mark.parametrize("text", [
    "b 1 1\n",
    "s td 2 1 2\nb 1 1\nb 2 2\n",
    "s td 1 1 2\nb 1 1 2\n",
    "s td 1 2 2\nb 1 1 5\n",
    "s td 2 2 2\nb 1 1\nb 1 2\n1 2\n",
])
def test_pace_errors(text):
    with pytest.raises(ParseError):
        parse_pace_td(text)
