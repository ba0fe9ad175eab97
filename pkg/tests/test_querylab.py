import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import assignments, eval_circuit
from twsdd.analysis import condition, model_count, verify, weighted_count
from twsdd.boolfunc import cofactor
from twsdd.compile import compile_sdd
from twsdd.errors import CapacityError, DomainError, ParseError
from twsdd.querylab import (Database, HFamily, balanced_node, experiment_csv, h_family,
                            hardness_experiment, lineage, matches, node_with_vars, parse_database,
                            parse_query, random_instance)
from twsdd.vtree import prune_to, random_vtree


def satisfies(q, db, present):
    """Does the subdatabase ``present`` satisfy ``q``?  Valuations over the active domain."""
    facts = {(r, vals) for vid, (r, vals) in enumerate(db.tuples) if vid in present}
    dom = db.domain()
    for cq in q.disjuncts:
        vs = cq.variables
        for vals in itertools.product(dom, repeat=len(vs)):
            env = dict(zip(vs, vals))
            val = lambda t: t if isinstance(t, int) else env[t]  # noqa: E731
            if all((r, tuple(val(t) for t in ts)) in facts for r, ts in cq.atoms) and \
                    all(val(a) != val(b) for a, b in cq.neqs):
                return True
    return False


def check_lineage(q, db):
    c = lineage(q, db)
    vs = db.vars
    for a in assignments(vs):
        present = {v for v in vs if a[v]}
        assert eval_circuit(c, a) == satisfies(q, db, present)


def db_of(text):
    return parse_database(text)


def test_existential_unary_query():
    db = db_of("rel R/1\nt R 1\nt R 2\n")
    q = parse_query("q() :- R(x)")
    c = lineage(q, db)
    assert c.to_function().model_count() == 3
    check_lineage(q, db)


def test_inequality_kills_the_only_valuation():
    db = db_of("rel R/1\nrel S/1\nt R 1\nt S 1\n")
    c = lineage(parse_query("q() :- R(x), S(y), x != y"), db)
    assert c.to_function().is_false()


def test_join_selects_matching_tuples():
    db = db_of("rel R/1\nrel S/1\nt R 1\nt S 1\nt R 2\n")
    q = parse_query("R(x), S(x)")
    c = lineage(q, db)
    f = c.to_function()
    r1, s1 = db.pool.id("R(1)"), db.pool.id("S(1)")
    assert f.model_count() == 1 and set(f.vars) == {r1, s1}
    check_lineage(q, db)


def test_constants_and_disjuncts():
    db = db_of("rel R/2\nrel T/1\nt R 1 2\nt R 2 2\nt T 3 p=1/2\n")
    q = parse_query("q() :- R(1, y) | T(x), R(x, x)")
    assert len(q.disjuncts) == 2
    assert [len(m) for m in matches(q.disjuncts[0], db)] == [1]
    check_lineage(q, db)
    assert str(parse_query(str(q))) == str(q)


def test_seeded_random_lineages():
    rng = random.Random(11)
    for _ in range(40):
        q, db = random_instance(rng)
        check_lineage(q, db)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_lineages_are_monotone(seed):
    q, db = random_instance(random.Random(seed))
    f = lineage(q, db).to_function()
    for a in assignments(f.vars):
        if f(a):
            for v in f.vars:
                assert f({**a, v: 1})


def test_tuple_probabilities_give_query_probability():
    db = db_of("rel R/1\nrel S/1\nt R 1 p=1/2\nt S 1 p=1/3\n")
    c = lineage(parse_query("R(x), S(x)"), db)
    f = c.to_function()
    from twsdd.vtree import balanced_vtree
    form = compile_sdd(f, balanced_vtree(f.vars))
    assert weighted_count(form, db.prob) * 6 == 1


@pytest.mark.parametrize("text", [
    "rel R\n", "rel R/1\nt R 1 2\n", "t R 1\n", "rel R/1\nt R 1\nt R 1\n",
    "rel R/1\nt R 1 p=3/2\n", "rel R/1\nt R a\n", "bogus\n", "rel R/1\nrel R/2\n",
])
def test_database_errors(text):
    with pytest.raises(ParseError) as err:
        parse_database(text)
    assert err.value.line is not None


@pytest.mark.parametrize("text", [
    "q(x) :- R(x)", "R(x), x != w", "R(x), ", "R(X)", "R(x) S(y)",
])
def test_query_errors(text):
    with pytest.raises(ParseError):
        parse_query(text)


def test_query_database_mismatch():
    db = db_of("rel R/1\nt R 1\n")
    with pytest.raises(DomainError):
        lineage(parse_query("R(x, y)"), db)
    with pytest.raises(DomainError):
        lineage(parse_query("S(x)"), db)
    with pytest.raises(DomainError):
        Database().add("R", [1])


# -- the H family -----------------------------------------------------------

def h_oracle(fam, i, a):
    n, k = fam.n, fam.k
    r = range(1, n + 1)
    if i == 0:
        return any(a[fam.x(l)] and a[fam.z(1, l, m)] for l in r for m in r)
    if i == k:
        return any(a[fam.z(k, l, m)] and a[fam.y(m)] for l in r for m in r)
    return any(a[fam.z(i, l, m)] and a[fam.z(i + 1, l, m)] for l in r for m in r)


@pytest.mark.parametrize("k, n", [(1, 1), (1, 2), (2, 2), (3, 1)])
def test_h_functions_match_their_formula(k, n):
    fam = HFamily(k, n)
    for i in range(k + 1):
        f = fam.function(i)
        c = fam.circuit(i)
        for a in assignments(f.vars):
            assert bool(f(a)) == h_oracle(fam, i, a) == eval_circuit(c, a)


def test_h_small_displays():
    f = h_family(1, 1, 0)
    assert f.vars == (0, 2) and f.model_count() == 1
    fam = HFamily(1, 2)
    g = fam.function(1)
    names = fam.names()
    assert sorted(names[v] for v in g.vars) == ["y1", "y2", "z1_1_1", "z1_1_2", "z1_2_1", "z1_2_2"]
    # H^0 with every x off is false
    for n in (1, 2, 3):
        fam = HFamily(1, n)
        h0 = fam.function(0)
        assert cofactor(h0, {x: 0 for x in fam.X}).is_false()


def test_h_family_validation():
    with pytest.raises(DomainError):
        HFamily(0, 2)
    with pytest.raises(DomainError):
        HFamily(1, 2).pairs(3)
    with pytest.raises(CapacityError):
        HFamily(1, 5).function(0)


def test_shared_vtree_separates_blocks():
    fam = HFamily(2, 2)
    tree = fam.shared_vtree()
    for i in range(3):
        left, right = fam.blocks(i)
        p = prune_to(tree, fam.vars(i))
        assert p.X[p.left(p.root)] == tuple(sorted(left))
        assert p.X[p.right(p.root)] == tuple(sorted(right))
        assert node_with_vars(p, left) == p.left(p.root)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_balanced_node_window(k, n, seed):
    fam = HFamily(k, n)
    tree = random_vtree(sorted(fam.names()), random.Random(seed))
    v, count, ok = balanced_node(tree, fam)
    xy = set(fam.X) | set(fam.Y)
    assert count == len(set(tree.X[v]) & xy)
    if n >= 3:
        # every child of v is at most a fifth, v itself above it: the window holds
        assert ok and 2 * n <= 5 * count <= 4 * n


@pytest.mark.parametrize("n", [2, 3, 4])
def test_separated_h0_floor(n):
    rows = hardness_experiment(1, [n])
    h0 = next(r for r in rows if r["i"] == 0)
    assert h0["floor"] == 2 ** n - 1
    assert h0["size"] >= 2 ** n - 1
    assert h0["cover"] >= 2 ** n - 1 and h0["rank"] >= 2 ** n - 1
    assert all(r["ok"] for r in rows)


def test_sizes_grow_with_n():
    rows = hardness_experiment(1, [2, 3, 4])
    for i in (0, 1):
        sizes = [r["size"] for r in rows if r["i"] == i]
        assert sizes == sorted(set(sizes))


def test_dsnnf_and_two_layers():
    rows = hardness_experiment(2, [2], compiler="dsnnf")
    assert [r["i"] for r in rows] == [0, 1, 2] and all(r["ok"] for r in rows)
    middle = rows[1]
    assert middle["rank"] == 15


@pytest.mark.parametrize("seed", range(6))
def test_auto_selected_floors_on_random_vtrees(seed):
    rows = hardness_experiment(1, [3, 4], auto_select=True, rng=random.Random(seed))
    assert rows and all(r["ok"] and r["balanced"] for r in rows)
    assert all(r["cover"] >= r["floor"] >= 1 for r in rows)


def test_auto_select_on_shared_vtree():
    rows = hardness_experiment(1, [3, 4], auto_select=True)
    assert rows and all(r["ok"] for r in rows)


def test_random_vtree_needs_auto_select():
    with pytest.raises(DomainError):
        hardness_experiment(1, [2], rng=random.Random(0))


def test_csv():
    text = experiment_csv(hardness_experiment(1, [2]))
    lines = text.splitlines()
    assert lines[0] == "n,i,size,rank,cover,floor,ok"
    assert len(lines) == 3 and lines[1].startswith("2,0,")


@pytest.mark.parametrize("k, n", [(1, 2), (2, 2)])
def test_restrictions_of_a_combined_form_stay_deterministic(k, n):
    """A function with every H^i as a cofactor, restricted back to each H^i."""
    fam = HFamily(k, n)
    # selectors s_0..s_k pick which H^i is active; they are fresh ids past z
    base = max(fam.names()) + 1
    sel = [base + i for i in range(k + 1)]
    vs = sorted(set().union(*(fam.vars(i) for i in range(k + 1))) | set(sel))
    if len(vs) > 20:
        pytest.skip("instance too large for exhaustive checks")
    from twsdd.boolfunc import tabulate
    import numpy as np

    def fn(c):
        out = np.zeros_like(c[vs[0]])
        for i in range(k + 1):
            term = c[sel[i]]
            for j in range(k + 1):
                if j != i:
                    term = term & ~c[sel[j]]
            h = np.logical_or.reduce([c[a] & c[b] for a, b in fam.pairs(i)])
            out |= term & h
        return out

    f = tabulate(vs, fn)
    tree = random_vtree(vs, random.Random(k * 10 + n))
    form = compile_sdd(f, tree)
    for i in range(k + 1):
        b = {s: int(j == i) for j, s in enumerate(sel)}
        others = [v for v in vs if v not in fam.vars(i) and v not in sel]
        b.update({v: 0 for v in others})
        r = condition(form, b)
        rep = verify(r, fam.function(i), distinct_subs=False)
        assert rep["deterministic"].ok and rep["structured"].ok and rep["equivalent"].ok
        assert model_count(r) == fam.function(i).model_count()
