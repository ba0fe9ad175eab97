"""Canonical compilation of a function against a vtree.

Two constructions share the same per-node factor tables:

* :func:`compile_dsnnf` -- one circuit per (vtree node, factor): a factor
  ``H`` at node ``v`` is the disjoint union of the rectangles
  ``sat(G) x sat(G')`` over the factorized implicants ``(G, G')`` of ``H``.
* :func:`compile_sdd` -- one circuit per (vtree node, set of factors),
  grouping left factors by the set of right factors they pair with so that
  every disjunction is a sentential decision.

Implicant membership is a single lookup: by the factor dichotomy, a pair
of factors is an implicant of ``H`` iff the union of their least models
lies in ``sat(H)``.
"""

import sys
from dataclasses import dataclass, field

import numpy as np

from .boolfunc import BoolFunc, factorize
from .errors import DomainError
from .form import Form


@dataclass
class WidthReport:
    per_node: dict
    value: int
    size: int = None
    measure: str = ""

    def as_dict(self):
        return {"measure": self.measure, "value": self.value, "size": self.size,
                "per_node": {str(k): v for k, v in sorted(self.per_node.items())}}


def _deposit(indices, positions):
    """Spread the bits of ``indices`` to the given bit ``positions``."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros_like(indices)
    for i, p in enumerate(positions):
        out |= ((indices >> i) & 1) << p
    return out


class FactorTables:
    """Factorizations of ``f`` at every vtree node plus pair-label matrices.

    ``pair[v][g, g2]`` is the factor (at ``v``) containing the union of the
    least models of factor ``g`` at the left child and ``g2`` at the right.
    """

    def __init__(self, f: BoolFunc, tree):
        if any(tree.is_dummy(v) for v in range(len(tree))):
            raise DomainError("vtree has dummy leaves; prune it to the function's variables first")
        if tree.vars != f.vars:
            raise DomainError(f"vtree is over {tree.vars}, function over {f.vars}")
        self.f = f
        self.tree = tree
        self.fz = [None] * len(tree)
        self.pair = [None] * len(tree)
        for v in range(len(tree)):
            cs = tree.children[v]
            if len(cs) == 1:
                self.fz[v] = self.fz[cs[0]]
                continue
            self.fz[v] = factorize(f, tree.X[v])
            if len(cs) == 2:
                self.pair[v] = self._pairs(v, *cs)
        root = self.fz[tree.root]
        ones = [h for h, c in enumerate(root.cofactors) if c.is_true()]
        self.root_factor = ones[0] if ones else None

    def _pairs(self, v, w, w2):
        xv = self.tree.X[v]
        pos = {x: i for i, x in enumerate(xv)}
        dl = _deposit(self.fz[w].witnesses, [pos[x] for x in self.tree.X[w]])
        dr = _deposit(self.fz[w2].witnesses, [pos[x] for x in self.tree.X[w2]])
        return self.fz[v].labels[dl[:, None] | dr[None, :]]

    def count(self, v) -> int:
        return len(self.fz[v])

    def implicants(self, v, h):
        """Index pairs ``(g, g2)`` forming the implicants of factor ``h`` at ``v``."""
        return [tuple(map(int, p)) for p in np.argwhere(self.pair[v] == h)]


def _constant_form(f, tree, kind, names):
    form = Form(tree, kind, names)
    g = form.true() if f.is_true() else form.false()
    return form.finish(g)


def _check_inputs(f, tree):
    if not isinstance(f, BoolFunc):
        raise DomainError("expected a BoolFunc")
    if tree is None:
        return
    if tree.vars != f.vars:
        raise DomainError(f"vtree is over {tree.vars}, function over {f.vars}")


def compile_dsnnf(f: BoolFunc, tree, names=None, tables=None) -> Form:
    """The canonical deterministic structured NNF of ``f`` over ``tree``.

    Constant functions (including functions of no variables) compile to a
    single constant gate.  A leaf whose variable does not split the
    function gets its own scoped ``true`` gate.
    """
    _check_inputs(f, tree)
    if f.is_true() or f.is_false():
        return _constant_form(f, tree, "dsnnf", names)
    ft = tables or FactorTables(f, tree)
    form = Form(tree, "dsnnf", names)
    memo = {}

    def build(v, h):
        # explicit stack; results land in memo
        stack = [(v, h)]
        while stack:
            v, h = stack[-1]
            if (v, h) in memo:
                stack.pop()
                continue
            cs = tree.children[v]
            if not cs:
                x = tree.labels[v]
                if ft.count(v) == 1:
                    memo[(v, h)] = form.true(v)
                else:
                    memo[(v, h)] = form.lit(x, h == 1)
                stack.pop()
                continue
            if len(cs) == 1:
                sub = (cs[0], h)
                if sub in memo:
                    memo[(v, h)] = memo[sub]
                    stack.pop()
                else:
                    stack.append(sub)
                continue
            w, w2 = cs
            pairs = ft.implicants(v, h)
            todo = [k for p in pairs for k in ((w, p[0]), (w2, p[1])) if k not in memo]
            if todo:
                stack.extend(todo)
                continue
            ands = [form.and_(v, memo[(w, g)], memo[(w2, g2)]) for g, g2 in pairs]
            memo[(v, h)] = form.or_(v, ands)
            stack.pop()
        return memo[(v, h)]

    out = build(tree.root, ft.root_factor)
    return form.finish(out)


def compile_sdd(f: BoolFunc, tree, names=None, tables=None) -> Form:
    """The canonical SDD of ``f`` over ``tree``.

    The empty factor set compiles to a shared ``false`` gate and the full
    factor set to a shared ``true`` gate at every node.
    """
    _check_inputs(f, tree)
    if f.is_true() or f.is_false():
        return _constant_form(f, tree, "sdd", names)
    ft = tables or FactorTables(f, tree)
    form = Form(tree, "sdd", names)
    memo = {}
    decisions = {}

    def groups(v, hset):
        key = (v, hset)
        if key not in decisions:
            pair = ft.pair[v]
            member = np.isin(pair, np.fromiter(hset, dtype=pair.dtype))
            by_s = {}
            for g in range(pair.shape[0]):
                s = tuple(int(x) for x in np.flatnonzero(member[g]))
                by_s.setdefault(s, []).append(g)
            decisions[key] = [(tuple(p), s) for s, p in by_s.items()]
        return decisions[key]

    def leafgate(v, hset):
        if not hset:
            return form.false()
        if len(hset) == ft.count(v):
            return form.true()
        if not tree.children[v]:
            (h,) = hset
            return form.lit(tree.labels[v], h == 1)
        return None

    def build(v, hset):
        stack = [(v, hset)]
        while stack:
            v, hset = stack[-1]
            if (v, hset) in memo:
                stack.pop()
                continue
            g = leafgate(v, hset)
            if g is not None:
                memo[(v, hset)] = g
                stack.pop()
                continue
            cs = tree.children[v]
            if len(cs) == 1:
                sub = (cs[0], hset)
                if sub in memo:
                    memo[(v, hset)] = memo[sub]
                    stack.pop()
                else:
                    stack.append(sub)
                continue
            w, w2 = cs
            gs = groups(v, hset)
            todo = [k for p, s in gs for k in ((w, p), (w2, s)) if k not in memo]
            if todo:
                stack.extend(todo)
                continue
            ands = [form.and_(v, memo[(w, p)], memo[(w2, s)]) for p, s in gs]
            memo[(v, hset)] = form.or_(v, ands)
            stack.pop()
        return memo[(v, hset)]

    out = build(tree.root, (ft.root_factor,))
    return form.finish(out)


def implicants(f: BoolFunc, h: BoolFunc, y, y2):
    """Factorized implicants of the factor ``h`` relative to ``(f, y, y2)``.

    Returns the set of pairs ``(G, G')`` of factor functions.
    """
    y = set(y) & set(f.vars)
    y2 = set(y2) & set(f.vars)
    if y & y2:
        raise DomainError("Y and Y' must be disjoint")
    fu = factorize(f, y | y2)
    if h.vars != fu.block or h not in fu.factors:
        raise DomainError("H is not a factor of F relative to Y and Y'")
    hidx = fu.factors.index(h)
    fa, fb = factorize(f, y), factorize(f, y2)
    pos = {x: i for i, x in enumerate(fu.block)}
    dl = _deposit(fa.witnesses, [pos[x] for x in fa.block])
    dr = _deposit(fb.witnesses, [pos[x] for x in fb.block])
    pair = fu.labels[dl[:, None] | dr[None, :]]
    return {(fa.factors[g], fb.factors[g2]) for g, g2 in np.argwhere(pair == hidx)}


def factor_width(f: BoolFunc, tree) -> WidthReport:
    """``max_v |factors(f, Z_v)|``; dummy leaves and extra variables allowed."""
    per = {v: len(factorize(f, tree.Z[v])) for v in range(len(tree))}
    return WidthReport(per, max(per.values()), measure="fw")


def _width(form: Form, measure) -> WidthReport:
    per = form.ands_by_node()
    return WidthReport(per, max(per.values(), default=0), form.size, measure)


def fiw(f: BoolFunc, tree, form=None) -> WidthReport:
    form = form if form is not None else compile_dsnnf(f, tree)
    return _width(form, "fiw")


def sdw(f: BoolFunc, tree, form=None) -> WidthReport:
    form = form if form is not None else compile_sdd(f, tree)
    return _width(form, "sdw")


def dsnnf_size_bound(n, k) -> int:
    return 2 * n + 1 + 3 * k * (n - 1)


def sdd_size_bound(n, k) -> int:
    return 2 * (n + 1) + 3 * k * (n - 1)


@dataclass
class OBDD:
    """Reduced ordered BDD; nodes ``0``/``1`` are the terminals.

    ``nodes[i] = (level, lo, hi)`` for ``i >= 2``; ``order[level]`` is the
    variable tested at that level.
    """

    order: list
    nodes: dict
    root: int
    _levels: dict = field(default=None, repr=False)

    def eval(self, assignment) -> int:
        u = self.root
        while u > 1:
            level, lo, hi = self.nodes[u]
            u = hi if assignment[self.order[level]] else lo
        return u

    def level_widths(self):
        out = [0] * len(self.order)
        for level, _, _ in self.nodes.values():
            out[level] += 1
        return out

    @property
    def width(self) -> int:
        return max(self.level_widths(), default=0)

    @property
    def size(self) -> int:
        return len(self.nodes)


_TOP = -1  # stands for a satisfied branch inside gate sets


def obdd_export(form: Form) -> OBDD:
    """Read a form over a linear vtree as a reduced OBDD.

    Each gate set at a level stands for the disjunction of its gates; a
    decision at the level's vtree node is split on the level variable by
    looking at the primes (literals of that variable or ``true``).
    """
    tree = form.vtree
    if tree is None or not tree.is_linear():
        raise DomainError("OBDD export needs a form over a linear vtree")
    order = tree.linear_order()
    nvars = len(order)
    level_of_var = {x: i for i, x in enumerate(order)}
    spine = {}
    v = tree.root
    i = 0
    while not tree.is_leaf(v):
        spine[v] = i
        v = tree.right(v)
        i += 1
    spine[v] = i

    def level(g):
        k = form.kinds[g]
        if k == "lit":
            return level_of_var[form.args[g][0]]
        if k in ("true", "false"):
            return nvars
        return spine[form.nodes[g]]

    def prime_values(p, x):
        k = form.kinds[p]
        if k == "true":
            return (True, True)
        if k == "false":
            return (False, False)
        if k == "lit" and form.args[p][0] == x:
            return (not form.args[p][1], form.args[p][1])
        raise DomainError(f"gate {p} is not a prime on {x}")

    nodes = {}
    unique = {}
    memo = {}

    def mk(lvl, lo, hi):
        if lo == hi:
            return lo
        key = (lvl, lo, hi)
        if key not in unique:
            u = len(nodes) + 2
            unique[key] = u
            nodes[u] = key
        return unique[key]

    def split(gates, i):
        x = order[i]
        lo, hi = set(), set()
        for g in gates:
            if level(g) > i:
                lo.add(g)
                hi.add(g)
                continue
            k = form.kinds[g]
            if k == "lit":
                (hi if form.args[g][1] else lo).add(_TOP)
                continue
            pairs = [form.args[g]] if k == "and" else [form.args[c] for c in form.args[g]]
            for p, s in pairs:
                v0, v1 = prime_values(p, x)
                if v0:
                    lo.add(s)
                if v1:
                    hi.add(s)
        return frozenset(lo), frozenset(hi)

    def build(gates, i):
        gates = frozenset(g for g in gates if g == _TOP or form.kinds[g] != "false")
        if any(g == _TOP or form.kinds[g] == "true" for g in gates):
            return 1
        if not gates:
            return 0
        key = (gates, i)
        if key in memo:
            return memo[key]
        lo, hi = split(gates, i)
        u = mk(i, build(lo, i + 1), build(hi, i + 1))
        memo[key] = u
        return u

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * nvars + 100))
    try:
        root = build({form.output}, 0)
    finally:
        sys.setrecursionlimit(limit)
    return OBDD(order, nodes, root)
