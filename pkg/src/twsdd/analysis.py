"""Verification, exact weighted counting, rectangle covers and rank bounds."""

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boolfunc import STORE, const, factorize, index_assignment, tabulate, varset
from .circuit import UndirectedGraph
from .errors import CapacityError, DomainError, ParseError, check_cap
from .form import Form
from .treedec import TreeDecomposition

RANK_LIMIT = 1024


# -- per-gate semantics ---------------------------------------------------

def gate_vars(form: Form):
    """Syntactic variable set of every gate (sorted tuples)."""
    out = []
    for k, a in zip(form.kinds, form.args):
        if k == "lit":
            out.append((a[0],))
        elif k in ("and", "or"):
            s = set()
            for c in a:
                s.update(out[c])
            out.append(tuple(sorted(s)))
        else:
            out.append(())
    return out


def _extend(table, src, dst):
    """View a table over ``src`` as a table over the superset ``dst``."""
    if src == dst:
        return table
    inner = set(src)
    shape = [2 if v in inner else 1 for v in reversed(dst)]
    t = np.broadcast_to(table.reshape(shape), (2,) * len(dst))
    return np.ascontiguousarray(t).reshape(-1)


def gate_functions(form: Form, keep=None):
    """Table of every gate over its own variable set.

    Returns ``(vars, tables)`` where ``tables[g]`` is a flat bool array over
    ``vars[g]``.  Tables are computed bottom-up; when ``keep`` is given only
    those gates' tables are retained once their parents are done.
    """
    gv = gate_vars(form)
    for vs in gv:
        check_cap(len(vs), "gate scope")
    uses = [0] * len(form)
    for g in range(len(form)):
        for c in form.children(g):
            uses[c] += 1
    tabs = [None] * len(form)
    for g, (k, a) in enumerate(zip(form.kinds, form.args)):
        vs = gv[g]
        if k == "true":
            t = np.ones(1, dtype=bool)
        elif k == "false":
            t = np.zeros(1, dtype=bool)
        elif k == "lit":
            t = np.array([not a[1], a[1]])
        elif k == "and":
            t = _extend(tabs[a[0]], gv[a[0]], vs) & _extend(tabs[a[1]], gv[a[1]], vs)
        else:
            t = np.zeros(1 << len(vs), dtype=bool)
            for c in a:
                t |= _extend(tabs[c], gv[c], vs)
        tabs[g] = t
        if keep is not None:
            for c in form.children(g):
                uses[c] -= 1
                if uses[c] == 0 and c not in keep:
                    tabs[c] = None
    return gv, tabs


def form_function(form: Form, vars_=None):
    """The function computed by the form, over ``vars_`` (default: form vars)."""
    gv, tabs = gate_functions(form, keep={form.output})
    vars_ = varset(vars_) if vars_ is not None else tuple(form.vars)
    src = gv[form.output]
    if not set(src) <= set(vars_):
        raise DomainError(f"form mentions variables outside {vars_}")
    return STORE.intern(vars_, _extend(tabs[form.output], src, vars_))


# -- verification ---------------------------------------------------------

@dataclass
class Check:
    name: str
    ok: bool = True
    gate: int = None
    assignment: dict = None
    detail: str = ""

    def fail(self, gate, detail, assignment=None):
        if self.ok:
            self.ok = False
            self.gate = gate
            self.detail = detail
            self.assignment = assignment


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {c.name: {"ok": c.ok, "gate": c.gate, "detail": c.detail,
                         "assignment": c.assignment} for c in self.checks}

    def summary(self) -> str:
        parts = []
        for c in self.checks:
            parts.append(f"{c.name}: {'ok' if c.ok else 'FAIL (' + c.detail + ')'}")
        return "; ".join(parts)


def verify(form: Form, expected=None, distinct_subs=True) -> VerifyReport:
    """Check decomposability, structuredness, determinism and, for SDD forms,
    the sentential-decision conditions at every decision.

    ``distinct_subs=False`` skips the distinct-subs condition (for SDDs that
    are deliberately left uncompressed).  Never raises on a semantic failure;
    the first counterexample per property is recorded.
    """
    tree = form.vtree
    gv, tabs = gate_functions(form)
    dec = Check("decomposable")
    struct = Check("structured")
    det = Check("deterministic")
    checks = [dec, struct, det]
    sd = None
    if form.kind == "sdd":
        sd = [Check("sd1_exhaustive"), Check("sd2_exclusive")]
        if distinct_subs:
            sd.append(Check("sd3_distinct_subs"))
        checks += sd
    for g, (k, a) in enumerate(zip(form.kinds, form.args)):
        if k == "and":
            l, r = a
            common = set(gv[l]) & set(gv[r])
            if common:
                dec.fail(g, f"and gate {g} shares variables {sorted(common)}")
            node = form.nodes[g]
            if tree is None or node is None or len(tree.children[node]) != 2:
                struct.fail(g, f"and gate {g} has no two-child vtree node")
            else:
                xl, xr = tree.X[tree.left(node)], tree.X[tree.right(node)]
                if not (set(gv[l]) <= set(xl) and set(gv[r]) <= set(xr)):
                    struct.fail(g, f"and gate {g} not structured by node {node}")
        elif k == "or" and len(a) > 1:
            vs = gv[g]
            ext = [_extend(tabs[c], gv[c], vs) for c in a]
            total = np.zeros(1 << len(vs), dtype=np.uint16)
            for t in ext:
                total += t
            bad = np.flatnonzero(total > 1)
            if bad.size:
                idx = int(bad[0])
                pair = [c for c, t in zip(a, ext) if t[idx]][:2]
                det.fail(g, f"children {pair} of or gate {g} overlap",
                         index_assignment(vs, idx))
        if sd is not None and k == "or" and all(form.kinds[c] == "and" for c in a) and a:
            _check_decision(form, g, gv, tabs, sd)
    if expected is not None:
        eq = Check("equivalent")
        got = form_function(form, expected.vars) if set(form.vars) <= set(expected.vars) \
            else None
        if got is None or got != expected:
            diff = None
            if got is not None:
                idx = int(np.flatnonzero(got.table != expected.table)[0])
                diff = index_assignment(expected.vars, idx)
            eq.fail(form.output, "form differs from the expected function", diff)
        checks.append(eq)
    return VerifyReport(checks)


def _check_decision(form, g, gv, tabs, sd):
    tree = form.vtree
    node = form.nodes[g]
    if tree is None or node is None or len(tree.children[node]) != 2:
        return
    if any(form.nodes[c] != node for c in form.args[g]):
        return
    xl, xr = tree.X[tree.left(node)], tree.X[tree.right(node)]
    primes = [form.args[c][0] for c in form.args[g]]
    subs = [form.args[c][1] for c in form.args[g]]
    pt = [_extend(tabs[p], gv[p], xl) for p in primes]
    total = np.zeros(1 << len(xl), dtype=np.uint16)
    for t in pt:
        total += t
    if (total == 0).any():
        idx = int(np.flatnonzero(total == 0)[0])
        sd[0].fail(g, f"primes of decision {g} miss an assignment", index_assignment(xl, idx))
    if (total > 1).any() or any(not t.any() for t in pt):
        idx = int(np.flatnonzero(total > 1)[0]) if (total > 1).any() else None
        sd[1].fail(g, f"primes of decision {g} overlap or are unsatisfiable",
                   index_assignment(xl, idx) if idx is not None else None)
    if len(sd) > 2:
        seen = {}
        for c, s in zip(form.args[g], subs):
            key = _extend(tabs[s], gv[s], xr).tobytes()
            if key in seen:
                sd[2].fail(g, f"decision {g} has equivalent subs in and gates "
                              f"{seen[key]} and {c}")
            seen[key] = c


# -- counting -------------------------------------------------------------

def weighted_count(form: Form, weights) -> Fraction:
    """Probability of the form under independent variable probabilities.

    ``weights`` maps each variable id to ``p(x)`` (anything ``Fraction``
    accepts).  Exact rational arithmetic; requires a deterministic and
    decomposable form such as the compilers produce.
    """
    w = {}
    for v in form.vars:
        if v not in weights:
            raise DomainError(f"no weight for variable {v}")
        p = Fraction(weights[v])
        if not 0 <= p <= 1:
            raise DomainError(f"weight of variable {v} is outside [0, 1]")
        w[v] = p
    vals = []
    for g, (k, a) in enumerate(zip(form.kinds, form.args)):
        if k == "true":
            val = Fraction(1)
        elif k == "false":
            val = Fraction(0)
        elif k == "lit":
            if a[0] not in w:
                raise DomainError(f"literal on variable {a[0]} outside the form's variables")
            val = w[a[0]] if a[1] else 1 - w[a[0]]
        elif k == "and":
            if form.nodes[g] is None:
                raise DomainError(f"and gate {g} lacks a vtree annotation")
            val = vals[a[0]] * vals[a[1]]
        else:
            val = sum((vals[c] for c in a), Fraction(0))
        vals.append(val)
    return vals[form.output]


def model_count(form: Form) -> int:
    half = {v: Fraction(1, 2) for v in form.vars}
    total = weighted_count(form, half) * (1 << len(form.vars))
    if total.denominator != 1:
        raise DomainError("uniform count is not an integer; form is not deterministic")
    return int(total)


def parse_weights(text: str, pool=None, source=None) -> dict:
    """Weights from JSON (``{"x": "1/3"}``) or ``name=value`` lines.

    Keys are variable names, resolved through ``pool`` when given
    (otherwise returned as strings).  Values become Fractions.
    """
    text = text.strip()
    items = []
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno, source) from None
        items = [(k, str(v), None) for k, v in data.items()]
    else:
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected name=value", lineno, 1, source)
            k, v = line.split("=", 1)
            items.append((k.strip(), v.strip(), lineno))
    out = {}
    for k, v, lineno in items:
        try:
            p = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad probability {v!r} for {k}", lineno, None, source) from None
        if not 0 <= p <= 1:
            raise ParseError(f"probability for {k} outside [0, 1]", lineno, None, source)
        key = pool.id(k) if pool is not None else k
        out[key] = p
    return out


# -- rectangles and covers ------------------------------------------------

@dataclass
class Rectangle:
    """``sat = sat(left) x sat(right)`` over the partition ``(left.vars, right.vars)``."""

    left: object
    right: object

    def function(self, vars_):
        return self.left.extend(vars_) & self.right.extend(vars_)

    def size(self) -> int:
        return self.left.model_count() * self.right.model_count()


def extract_cover(form: Form, node) -> list:
    """Disjoint rectangle cover of the form's function at ``node``'s cut.

    Gates whose variables straddle the cut ("mixed") lie above ``node``;
    each path of mixed gates ends in a gate on one side, and the rectangles
    are grouped by the gate reached on ``node``'s side (or by the constant
    side when the path ends on the other side).  At most one rectangle per
    gate plus one is produced; the result is checked by brute force.
    """
    tree = form.vtree
    if tree is None or not 0 <= node < len(tree):
        raise DomainError(f"vtree has no node {node}")
    X = tuple(form.vars)
    X1 = tuple(x for x in tree.X[node] if x in set(X))
    X2 = tuple(x for x in X if x not in set(X1))
    s1, s2 = set(X1), set(X2)
    gv, tabs = gate_functions(form)

    def side(g):
        vs = set(gv[g])
        if not vs:
            return "const"
        if vs <= s1:
            return "left"
        if vs <= s2:
            return "right"
        return "mixed"

    def on(g, vs):
        return STORE.intern(vs, _extend(tabs[g], gv[g], vs))

    out = form.output
    kind = side(out)
    f = form_function(form, X)
    if kind != "mixed":
        if kind == "right":
            rects = [Rectangle(const(1, X1), on(out, X2))]
        else:
            left = on(out, X1) if kind == "left" else const(tabs[out][0], X1)
            rects = [Rectangle(left, const(1, X2))]
    else:
        size2 = 1 << len(X2)
        ctx = {out: np.ones(size2, dtype=bool)}
        groups = {}
        top = np.zeros(size2, dtype=bool)
        for g in range(len(form) - 1, -1, -1):
            if g not in ctx or side(g) != "mixed":
                continue
            q = ctx.pop(g)
            k = form.kinds[g]
            if k == "and":
                a, b = form.args[g]
                if side(a) in ("right", "const"):
                    a, b = b, a
                if side(b) == "mixed" or side(a) in ("right", "const"):
                    raise DomainError(f"and gate {g} is not structured across the cut")
                reach = [(a, q & _extend(tabs[b], gv[b], X2))]
            else:
                reach = [(c, q) for c in form.args[g]]
            for c, qc in reach:
                sc = side(c)
                if sc == "mixed":
                    ctx[c] = ctx[c] | qc if c in ctx else qc
                elif sc == "left":
                    groups[c] = groups[c] | qc if c in groups else qc
                elif sc == "right":
                    top |= qc & _extend(tabs[c], gv[c], X2)
                elif tabs[c][0]:
                    top |= qc
        rects = [Rectangle(on(c, X1), STORE.intern(X2, q)) for c, q in sorted(groups.items())]
        if top.any():
            rects.append(Rectangle(const(1, X1), STORE.intern(X2, top)))
    rects = [r for r in rects if not r.left.is_false() and not r.right.is_false()]
    _check_cover(rects, f, X)
    return rects


def _check_cover(rects, f, X):
    total = np.zeros(1 << len(X), dtype=np.uint16)
    for r in rects:
        total += r.function(X).table
    if (total > 1).any():
        raise DomainError("extracted rectangles overlap")
    if not np.array_equal(total.astype(bool), f.table):
        raise DomainError("extracted rectangles do not cover the function")


# -- communication matrices and rank -------------------------------------

def comm_matrix(f, X1, X2) -> np.ndarray:
    """``M[b1, b2] = f(b1 u b2)`` with rows/columns in table order of X1/X2."""
    X1, X2 = varset(X1), varset(X2)
    if set(X1) & set(X2) or set(X1) | set(X2) != set(f.vars):
        raise DomainError("(X1, X2) must partition the function's variables")
    fz = factorize(f, X1)
    return fz._rows.astype(np.int64)


def _bareiss_rank(mat) -> int:
    """Exact rank of an integer matrix by fraction-free elimination."""
    a = np.array(mat, dtype=object)
    rows, cols = a.shape
    rank = 0
    prev = 1
    for c in range(cols):
        if rank == rows:
            break
        nz = [r for r in range(rank, rows) if a[r, c] != 0]
        if not nz:
            continue
        p = nz[0]
        if p != rank:
            a[[rank, p]] = a[[p, rank]]
        piv = a[rank, c]
        below = a[rank + 1:, c:]
        if below.size:
            factor = a[rank + 1:, c][:, None]
            a[rank + 1:, c:] = (piv * below - factor * a[rank, c:][None, :]) // prev
        prev = piv
        rank += 1
    return rank


def _modp_rank(mat, p=2147483629) -> int:
    """Rank over GF(p); never exceeds the rational rank."""
    a = np.array(mat, dtype=np.int64) % p
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nz = np.flatnonzero(a[rank:, c])
        if nz.size == 0:
            continue
        r = rank + int(nz[0])
        if r != rank:
            a[[rank, r]] = a[[r, rank]]
        inv = pow(int(a[rank, c]), p - 2, p)
        a[rank] = (a[rank] * inv) % p
        col = a[rank + 1:, c].copy()
        a[rank + 1:] = (a[rank + 1:] - (col[:, None] * a[rank][None, :]) % p) % p
        rank += 1
    return rank


def rank_q(mat, limit=RANK_LIMIT) -> int:
    """Exact rank over the rationals of an integer matrix.

    The smaller dimension must not exceed ``limit``; a wide matrix is first
    replaced by its Gram matrix, which has the same rational rank.
    """
    mat = np.asarray(mat, dtype=np.int64)
    if mat.ndim != 2:
        raise DomainError("rank needs a matrix")
    if mat.shape[0] > mat.shape[1]:
        mat = mat.T
    if mat.shape[0] > limit:
        raise CapacityError(f"matrix side {mat.shape[0]} exceeds the rank limit {limit}")
    if mat.shape[0] == 0:
        return 0
    if mat.shape[1] > mat.shape[0]:
        gram = mat.astype(object) @ mat.T.astype(object)
    else:
        gram = mat.astype(object)
    full = min(gram.shape)
    small = all(abs(int(x)) < (1 << 30) for x in np.asarray(gram).flat)
    if small and _modp_rank(gram.astype(np.int64)) == full:
        return full
    return _bareiss_rank(gram)


def comm_rank(f, X1, X2, limit=RANK_LIMIT) -> int:
    """Rank over the rationals of the communication matrix of ``f``."""
    m = comm_matrix(f, X1, X2)
    return rank_q(m, limit)


def disjointness(n: int):
    """``D_n = AND_i (not x_i or not y_i)``; returns ``(f, X, Y)``.

    ``x_i`` has id ``i - 1`` and ``y_i`` id ``n + i - 1``.
    """
    if n < 1:
        raise DomainError("disjointness needs n >= 1")
    check_cap(2 * n, "disjointness")
    X = tuple(range(n))
    Y = tuple(range(n, 2 * n))
    f = tabulate(X + Y, lambda c: np.logical_and.reduce(
        [~(c[x] & c[y]) for x, y in zip(X, Y)]))
    return f, X, Y


def cover_lower_bound_check(form: Form, node, limit=RANK_LIMIT) -> dict:
    """Chain cover extraction and the rank bound at ``node``'s cut."""
    tree = form.vtree
    f = form_function(form)
    X1 = tuple(x for x in tree.X[node] if x in set(f.vars))
    X2 = tuple(x for x in f.vars if x not in set(X1))
    rects = extract_cover(form, node)
    if not X1 or not X2:
        rank = 1 if not f.is_false() else 0
    else:
        rank = comm_rank(f, X1, X2, limit)
    return {"node": node, "cover": len(rects), "rank": rank, "size": form.size,
            "ok": len(rects) >= rank and form.size >= rank and len(rects) <= form.size}


def condition(form: Form, assignment) -> Form:
    """Replace literals of assigned variables by constants.

    The result keeps the vtree and gate structure, so it stays
    deterministic and structured whenever the input was.
    """
    out = Form(form.vtree, form.kind, form.names)
    remap = []
    for g, (k, a, n) in enumerate(zip(form.kinds, form.args, form.nodes)):
        if k == "lit" and a[0] in assignment:
            val = bool(assignment[a[0]]) == a[1]
            remap.append(out.true() if val else out.false())
        elif k == "lit":
            remap.append(out.lit(*a))
        elif k == "true":
            remap.append(out.true(n))
        elif k == "false":
            remap.append(out.false(n))
        elif k == "and":
            remap.append(out.and_(n, remap[a[0]], remap[a[1]]))
        else:
            remap.append(out.or_(n, [remap[c] for c in a]))
    out.finish(remap[form.output])
    out.vars = tuple(v for v in form.vars if v not in assignment)
    return out


# -- treewidth of compiled forms ------------------------------------------

def form_graph(form: Form) -> UndirectedGraph:
    """Undirected graph underlying the form's gate DAG."""
    g = UndirectedGraph(len(form))
    for p in range(len(form)):
        for c in form.children(p):
            g.add_edge(p, c)
    return g


def form_decomposition(form: Form) -> TreeDecomposition:
    """Tree decomposition shaped like the vtree.

    The bag of node ``v`` is the union of the closed neighbourhoods of the
    ``and`` gates structured by ``v``.  A form without ``and`` gates puts
    its gates in the root bag.
    """
    tree = form.vtree
    graph = form_graph(form)
    bags = [set() for _ in range(len(tree))]
    for g, (k, n) in enumerate(zip(form.kinds, form.nodes)):
        if k == "and":
            bags[n].add(g)
            bags[n].update(graph.neighbors(g))
    if not any(bags):
        bags[tree.root].update(range(len(form)))
    return TreeDecomposition(bags, [list(cs) for cs in tree.children], tree.root)
