import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circuits
from twsdd.boolfunc import VarPool
from twsdd.errors import DomainError, ParseError
from twsdd.treedec import make_nice, min_fill_decompose
from twsdd.vtree import (Dummy, balanced_vtree, derive_vtree, from_nested, isa_nodes, isa_vtree,
                         linear_vtree, parse_vtree, prune_to, random_vtree, vtree_from_nice_td,
                         write_vtree)


def leaf_sets(tree):
    """Real variables below each node, recomputed from the children lists."""
    out = []
    for v, cs in enumerate(tree.children):
        if cs:
            out.append(set().union(*(out[c] for c in cs)))
        else:
            lab = tree.labels[v]
            out.append({lab} if lab >= 0 else set())
    return out


var_lists = st.lists(st.integers(0, 30), min_size=1, max_size=10, unique=True)


@given(var_lists, st.integers(0, 10 ** 6))
def test_random_vtree_is_full_over_its_variables(vs, seed):
    t = random_vtree(vs, random.Random(seed))
    assert t.is_full() and sorted(t.vars) == sorted(vs)
    assert [set(x) for x in t.X] == leaf_sets(t)
    # postorder: children before parents, root last
    assert all(c < v for v in range(len(t)) for c in t.children[v])
    assert t.root == len(t) - 1


@given(var_lists)
def test_linear_vtree_order(vs):
    t = linear_vtree(vs)
    assert t.is_linear()
    assert t.linear_order() == vs


@given(var_lists, st.integers(0, 10 ** 6), st.data())
def test_prune_keeps_induced_blocks(vs, seed, data):
    t = random_vtree(vs, random.Random(seed))
    keep = data.draw(st.sets(st.sampled_from(vs), min_size=1))
    p = prune_to(t, keep)
    assert sorted(p.vars) == sorted(keep) and p.is_full()
    # every block of the pruned tree is a non-empty restriction of an original block
    original = {tuple(sorted(set(x) & keep)) for x in t.X}
    for x in p.X:
        assert x in original
        assert p.X[p.root] == tuple(sorted(keep))
    for v in range(len(p)):
        assert set(p.X[v]) == set(t.X[p.origin[v]]) & keep


@settings(max_examples=60)
@given(circuits(max_vars=5, max_gates=14))
def test_vtree_from_nice_decomposition(c):
    g = c.underlying_graph()
    ntd = make_nice(min_fill_decompose(g), g)
    t = vtree_from_nice_td(ntd, c.input_gates())
    assert sorted(t.vars) == sorted(c.vars)
    assert all(len(cs) <= 2 for cs in t.children)
    # each input variable's leaf is the left child of a two-child node
    for x in c.vars:
        leaf = t.leaf_of(x)
        p = t.parent[leaf]
        assert p != -1 or len(t) == 1
        if p != -1:
            assert t.children[p][0] == leaf and len(t.children[p]) == 2
    # dummies stand for the leaves of the decomposition
    assert sum(1 for v in range(len(t)) if t.is_dummy(v)) == ntd.kinds.count("leaf")
    full, _ = derive_vtree(c)
    assert full == t


def test_from_nested_and_shape():
    t = from_nested(((0, 1), (Dummy(), 2)))
    assert t.vars == (0, 1, 2)
    assert not t.is_full()
    assert t.shape() == ((0, 1), (-1, 2))
    with pytest.raises(DomainError):
        from_nested((0, 0))
    with pytest.raises(DomainError):
        from_nested((0, 1, 2))


def test_balanced_vtree_depth():
    t = balanced_vtree(range(8))
    assert max(t.depth(v) for v in t.leaves()) == 3


@given(var_lists, st.integers(0, 1000))
def test_text_round_trip(vs, seed):
    t = random_vtree(vs, random.Random(seed))
    names = {v: f"v{v}" for v in vs}
    pool = VarPool()
    back, pool = parse_vtree(write_vtree(t, names), pool)
    relabel = {pool.id(names[v]): v for v in vs}
    assert sorted(relabel[x] for x in back.vars) == sorted(vs)
    assert write_vtree(back, {i: names[relabel[i]] for i in relabel}) == write_vtree(t, names)


def test_text_with_dummy_and_unary():
    text = "L 0 a\nD 1\nU 2 1\nI 3 0 2\nR 3\n"
    t, pool = parse_vtree(text)
    assert t.vars == (pool.id("a"),)
    assert sum(t.is_dummy(v) for v in range(len(t))) == 1


@pytest.mark.parametrize("text", [
    "L 0 a\n",
    "L 0 a\nL 0 b\nR 0\n",
    "L 0 a\nI 1 0 5\nR 1\n",
    "L 0 a\nL 1 a\nI 2 0 1\nR 2\n",
    "Q 0\nR 0\n",
    "L 0 a\nL 1 b\nR 0\n",
    "L 0 a\nR 0\nR 0\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_vtree(text)


def test_isa_vtree_small_instance():
    t, names = isa_vtree(1, 2)
    # y1 above a left-linear tree on z1..z4
    assert t.shape() == (0, (((1, 2), 3), 4))
    assert names == {0: "y1", 1: "z1", 2: "z2", 3: "z3", 4: "z4"}
    w, v = isa_nodes(t, 1, 2)
    assert w[1] == t.root
    assert set(v) == {2, 3, 4}
    assert v[4] == t.right(t.root)
    assert t.X[v[4]] == (1, 2, 3, 4)
    assert t.right(v[3]) == t.leaf_of(3)


def test_isa_params_checked():
    with pytest.raises(DomainError):
        isa_vtree(2, 3)
    t, _ = isa_vtree(2, 4)
    assert len(t.vars) == 18
