import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (assignments, brute_factor_count, circuits, eval_circuit, eval_form,
                     random_circuit)
from twsdd.boolfunc import const, factors, from_table, literal, tabulate
from twsdd.circuit import parse_circuit
from twsdd.compile import (compile_dsnnf, compile_sdd, dsnnf_size_bound, factor_width, fiw,
                           implicants, obdd_export, sdd_size_bound, sdw)
from twsdd.errors import DomainError
from twsdd.vtree import Dummy, balanced_vtree, from_nested, linear_vtree, random_vtree

COMPILERS = [compile_dsnnf, compile_sdd]


def check_semantics(form, fn, vars_):
    for a in assignments(vars_):
        assert eval_form(form, a) == bool(fn(a))


def gate_values(form, a):
    vals = []
    for k, args in zip(form.kinds, form.args):
        if k == "true":
            vals.append(True)
        elif k == "false":
            vals.append(False)
        elif k == "lit":
            vals.append(bool(a[args[0]]) == args[1])
        elif k == "and":
            vals.append(vals[args[0]] and vals[args[1]])
        else:
            vals.append(any(vals[c] for c in args))
    return vals


@settings(max_examples=120, deadline=None)
@given(circuits(), st.integers(0, 10 ** 6))
def test_both_compilers_are_equivalent_to_the_circuit(c, seed):
    f = c.to_function()
    tree = random_vtree(f.vars, random.Random(seed))
    for comp in COMPILERS:
        form = comp(f, tree)
        check_semantics(form, lambda a: eval_circuit(c, a), f.vars)


@settings(max_examples=80, deadline=None)
@given(circuits(), st.integers(0, 10 ** 6))
def test_size_bounds_and_width_inequalities(c, seed):
    f = c.to_function()
    tree = random_vtree(f.vars, random.Random(seed))
    n = len(f.vars)
    d, s = compile_dsnnf(f, tree), compile_sdd(f, tree)
    fw = factor_width(f, tree).value
    k1, k2 = fiw(f, tree, d).value, sdw(f, tree, s).value
    assert d.size <= dsnnf_size_bound(n, k1)
    assert s.size <= sdd_size_bound(n, k2)
    assert k1 <= fw ** 2
    assert k2 <= 2 ** (2 * fw + 1)


@settings(max_examples=60, deadline=None)
@given(circuits(max_vars=5), st.integers(0, 10 ** 6))
def test_factor_width_per_node_matches_brute_force(c, seed):
    f = c.to_function()
    tree = random_vtree(f.vars, random.Random(seed))
    rep = factor_width(f, tree)
    fn = lambda a: eval_circuit(c, a)  # noqa: E731
    for v in range(len(tree)):
        assert rep.per_node[v] == brute_factor_count(fn, f.vars, tree.Z[v])
    assert rep.value == max(rep.per_node.values())


@settings(max_examples=60, deadline=None)
@given(circuits(max_vars=5), st.integers(0, 10 ** 6))
def test_every_or_gate_is_deterministic_and_every_and_structured(c, seed):
    f = c.to_function()
    tree = random_vtree(f.vars, random.Random(seed))
    for comp in COMPILERS:
        form = comp(f, tree)
        scope = []
        for k, args in zip(form.kinds, form.args):
            if k == "lit":
                scope.append({args[0]})
            elif k in ("and", "or"):
                scope.append(set().union(*(scope[x] for x in args)))
            else:
                scope.append(set())
        for g, (k, args, node) in enumerate(zip(form.kinds, form.args, form.nodes)):
            if k == "and":
                assert scope[args[0]] <= set(tree.X[tree.left(node)])
                assert scope[args[1]] <= set(tree.X[tree.right(node)])
        for a in assignments(f.vars):
            vals = gate_values(form, a)
            for k, args in zip(form.kinds, form.args):
                if k == "or":
                    assert sum(vals[x] for x in args) <= 1


@settings(max_examples=60, deadline=None)
@given(circuits(max_vars=5), st.integers(0, 10 ** 6))
def test_recompilation_is_identical(c, seed):
    f = c.to_function()
    tree = random_vtree(f.vars, random.Random(seed))
    for comp in COMPILERS:
        assert comp(f, tree).signature() == comp(f, tree).signature()


def test_equivalent_circuits_compile_identically():
    a = parse_circuit("v 3\ng0 input x\ng1 input y\ng2 input z\n"
                      "g3 and g0 g1\ng4 and g0 g2\ng5 or g3 g4\nout g5\n")
    b = parse_circuit("v 3\ng0 input x\ng1 input y\ng2 input z\n"
                      "g3 or g1 g2\ng4 not g0\ng5 not g4\ng6 and g5 g3\nout g6\n")
    fa, fb = a.to_function(), b.to_function()
    assert fa is fb
    tree = balanced_vtree(fa.vars)
    for comp in COMPILERS:
        assert comp(fa, tree).to_text() == comp(fb, tree).to_text()


def brute_implicants(f, fs_y, fs_y2, h):
    """All factor pairs whose product rectangle lies inside ``h``."""
    out = set()
    for g, g2 in itertools.product(fs_y, fs_y2):
        inside = all(h({**b, **b2}) for b in g.models() for b2 in g2.models())
        if inside:
            out.add((g, g2))
    return out


@settings(max_examples=60, deadline=None)
@given(circuits(max_vars=5), st.data())
def test_implicants_match_containment_search(c, data):
    f = c.to_function()
    vs = list(f.vars)
    y = data.draw(st.sets(st.sampled_from(vs)))
    y2 = data.draw(st.sets(st.sampled_from([v for v in vs if v not in y]) if len(y) < len(vs)
                           else st.nothing()))
    fs_y, fs_y2 = factors(f, y), factors(f, y2)
    total = 0
    union = np.zeros(1 << len(y | y2), dtype=int)
    for h in factors(f, y | y2):
        imp = implicants(f, h, y, y2)
        assert imp == brute_implicants(f, fs_y, fs_y2, h)
        total += len(imp)
        for g, g2 in imp:
            union += (g.extend(h.vars) & g2.extend(h.vars)).table
        # the implicants of h tile sat(h) exactly
    assert total == len(fs_y) * len(fs_y2)
    assert (union == 1).all()


def test_implicant_example_and_conjunction():
    f = tabulate([0, 1], lambda c: c[0] & c[1])
    h = from_table([0, 1], np.array([0, 0, 0, 1], dtype=bool))
    assert implicants(f, h, [0], [1]) == {(literal(0), literal(1))}
    with pytest.raises(DomainError):
        implicants(f, literal(0, vars_=[0, 1]), [0], [1])


def test_implication_examples():
    f = tabulate([0, 1], lambda c: ~c[0] | c[1])
    tree = linear_vtree([0, 1])
    d = compile_dsnnf(f, tree)
    assert d.size <= dsnnf_size_bound(2, fiw(f, tree, d).value)
    assert factor_width(f, tree).value == 2
    s = compile_sdd(f, tree)
    root = s.output
    assert s.kinds[root] == "or"
    decisions = set()
    for a in s.args[root]:
        p, q = s.args[a]
        prime = s.args[p] if s.kinds[p] == "lit" else s.kinds[p]
        sub = s.args[q] if s.kinds[q] == "lit" else s.kinds[q]
        decisions.add((prime, sub))
    assert decisions == {((0, True), (1, True)), ((0, False), "true")}


@pytest.mark.parametrize("value", [0, 1])
def test_constant_functions(value):
    f = const(value, [0, 1])
    tree = balanced_vtree([0, 1])
    for comp in COMPILERS:
        form = comp(f, tree)
        assert form.size == 1
        assert form.kinds[form.output] == ("true" if value else "false")
    assert fiw(f, tree).value == 0 and sdw(f, tree).value == 0
    assert factor_width(f, tree).value == 1


def test_parity_widths():
    f = tabulate(range(4), lambda c: c[0] ^ c[1] ^ c[2] ^ c[3])
    tree = balanced_vtree(range(4))
    assert factor_width(f, tree).value == 2
    assert fiw(f, tree).value <= 4


def test_compilers_reject_dummies_and_mismatched_vtrees():
    f = tabulate([0, 1], lambda c: c[0] | c[1])
    for comp in COMPILERS:
        with pytest.raises(DomainError):
            comp(f, from_nested((0, (1, Dummy()))))
        with pytest.raises(DomainError):
            comp(f, balanced_vtree([0, 1, 2]))


def reduced_obdd_widths(fn, order):
    """Distinct subfunctions depending on the level variable, per level."""
    widths = []
    for i, x in enumerate(order):
        before, after = order[:i], order[i:]
        subs = set()
        for b in assignments(before):
            sub = tuple(bool(fn({**b, **c})) for c in assignments(after))
            subs.add(sub)
        count = 0
        rest = order[i + 1:]
        for sub in subs:
            table = dict(zip([tuple(sorted(c.items())) for c in assignments(after)], sub))

            def val(c):
                return table[tuple(sorted(c.items()))]
            lo = [val({**c, x: 0}) for c in assignments(rest)]
            hi = [val({**c, x: 1}) for c in assignments(rest)]
            count += lo != hi
        widths.append(count)
    return widths


def sdw_linear_oracle(fn, order):
    """Distinct (prime, sub) pairs per internal level of a right-linear vtree."""
    widths = []
    level = {tuple(bool(fn(a)) for a in assignments(order))} - {(True,) * (1 << len(order)),
                                                              (False,) * (1 << len(order))}
    for i, x in enumerate(order[:-1]):
        rest = order[i + 1:]
        n_rest = 1 << len(rest)
        pairs, nxt = set(), set()
        for sub in level:
            # sub is a table over order[i:], x the least significant position
            c0, c1 = sub[0::2], sub[1::2]
            if c0 == c1:
                pairs.add(("top", c0))
            else:
                pairs.add(("neg", c0))
                pairs.add(("pos", c1))
            for c in (c0, c1):
                if c not in ((True,) * n_rest, (False,) * n_rest):
                    nxt.add(c)
        widths.append(len(pairs))
        level = nxt
    return widths


@settings(max_examples=80, deadline=None)
@given(circuits(max_vars=6), st.randoms(use_true_random=False))
def test_linear_sdd_width_and_obdd_export(c, rnd):
    f = c.to_function()
    order = list(f.vars)
    rnd.shuffle(order)
    tree = linear_vtree(order)
    s = compile_sdd(f, tree)
    fn = lambda a: eval_circuit(c, a)  # noqa: E731
    # the oracle reads tables with the first variable fastest, so rename
    # the variables to their positions in the order
    back = dict(enumerate(order))
    oracle = sdw_linear_oracle(lambda a: fn({back[i]: b for i, b in a.items()}),
                               list(range(len(order))))
    per = s.ands_by_node()
    spine = []
    v = tree.root
    while not tree.is_leaf(v):
        spine.append(v)
        v = tree.right(v)
    assert [per.get(v, 0) for v in spine] == oracle
    bdd = obdd_export(s)
    assert bdd.order == order
    for a in assignments(f.vars):
        assert bdd.eval(a) == int(fn(a))
    assert bdd.level_widths() == reduced_obdd_widths(fn, order)
    assert bdd.width <= max(oracle, default=0) or not oracle
    d = compile_dsnnf(f, tree)
    bdd2 = obdd_export(d)
    assert bdd2.nodes == bdd.nodes and bdd2.root == bdd.root


def test_parity_obdd():
    f = tabulate(range(3), lambda c: c[0] ^ c[1] ^ c[2])
    bdd = obdd_export(compile_sdd(f, linear_vtree([0, 1, 2])))
    assert bdd.level_widths() == [1, 2, 2]
    with pytest.raises(DomainError):
        obdd_export(compile_sdd(f, from_nested(((0, 1), 2))))


def test_seeded_corpus_equivalence():
    rng = random.Random(7)
    for _ in range(40):
        c = random_circuit(rng, max_gates=30)
        f = c.to_function()
        tree = random_vtree(f.vars, rng)
        for comp in COMPILERS:
            check_semantics(comp(f, tree), lambda a: eval_circuit(c, a), f.vars)
