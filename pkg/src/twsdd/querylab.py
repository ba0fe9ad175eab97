"""Query lineages over explicit databases and the H hardness family.

Database format::

    rel R/2                 # relation name and arity
    t R 1 2 p=0.5           # a tuple with optional probability

Query format (``|`` separates disjuncts, head optional)::

    q() :- R(x,y), S(y,z), x != z | T(x)

Lowercase identifiers are query variables, integers are constants.  The
lineage is built by joining atoms against the database (backtracking over
matching tuples), which yields the same tuple sets as enumerating all
valuations into the active domain.  Queries and databases need not be
ranked.
"""

import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import condition, cover_lower_bound_check
from .boolfunc import VarPool, tabulate
from .circuit import CircuitBuilder
from .compile import compile_dsnnf, compile_sdd
from .errors import CapacityError, DomainError, ParseError, check_cap
from .vtree import balanced_vtree, from_nested, prune_to, random_vtree


@dataclass
class Database:
    arity: dict = field(default_factory=dict)
    tuples: list = field(default_factory=list)      # (relation, values)
    prob: dict = field(default_factory=dict)        # var id -> Fraction
    pool: VarPool = field(default_factory=VarPool)

    def declare(self, rel, arity):
        if rel in self.arity and self.arity[rel] != arity:
            raise DomainError(f"relation {rel} redeclared with arity {arity}")
        self.arity[rel] = arity

    def add(self, rel, values, p=None) -> int:
        values = tuple(int(v) for v in values)
        if rel not in self.arity:
            raise DomainError(f"relation {rel} is not declared")
        if len(values) != self.arity[rel]:
            raise DomainError(f"{rel} has arity {self.arity[rel]}, got {len(values)} values")
        name = tuple_name(rel, values)
        if name in self.pool:
            raise DomainError(f"tuple {name} listed twice")
        vid = self.pool.add(name)
        self.tuples.append((rel, values))
        if p is not None:
            self.prob[vid] = Fraction(p)
        return vid

    @property
    def vars(self) -> tuple:
        return tuple(range(len(self.tuples)))

    def relation(self, rel):
        return [(vid, vals) for vid, (r, vals) in enumerate(self.tuples) if r == rel]

    def domain(self):
        return sorted({v for _, vals in self.tuples for v in vals})


def tuple_name(rel, values):
    return f"{rel}({','.join(map(str, values))})"


def parse_database(text: str, source=None) -> Database:
    db = Database()
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        try:
            if toks[0] == "rel":
                m = re.fullmatch(r"([A-Za-z_]\w*)/(\d+)", toks[1]) if len(toks) == 2 else None
                if not m:
                    raise ParseError("expected 'rel Name/arity'", lineno, 1, source)
                db.declare(m.group(1), int(m.group(2)))
            elif toks[0] == "t":
                if len(toks) < 2:
                    raise ParseError("expected 't Name v1 ... [p=..]'", lineno, 1, source)
                rel, rest = toks[1], toks[2:]
                p = None
                if rest and rest[-1].startswith("p="):
                    p = Fraction(rest[-1][2:])
                    if not 0 <= p <= 1:
                        raise ParseError("probability outside [0, 1]", lineno, None, source)
                    rest = rest[:-1]
                db.add(rel, [int(v) for v in rest], p)
            else:
                raise ParseError(f"unknown statement {toks[0]!r}", lineno, 1, source)
        except DomainError as e:
            raise ParseError(str(e), lineno, None, source) from None
        except (ValueError, ZeroDivisionError):
            raise ParseError("bad number", lineno, None, source) from None
    return db


@dataclass
class CQ:
    atoms: list           # (relation, terms); a term is a str variable or int constant
    neqs: list            # (term, term)

    @property
    def variables(self):
        seen = []
        for _, terms in self.atoms:
            for t in terms:
                if isinstance(t, str) and t not in seen:
                    seen.append(t)
        return seen


@dataclass
class UCQ:
    disjuncts: list

    def __str__(self):
        parts = []
        for cq in self.disjuncts:
            items = [f"{r}({','.join(map(str, ts))})" for r, ts in cq.atoms]
            items += [f"{a} != {b}" for a, b in cq.neqs]
            parts.append(", ".join(items))
        return "q() :- " + " | ".join(parts)


_ATOM = re.compile(r"\s*([A-Za-z_]\w*)\s*\(([^()]*)\)\s*")
_NEQ = re.compile(r"\s*(\w+)\s*!=\s*(\w+)\s*")


def _term(tok):
    tok = tok.strip()
    if re.fullmatch(r"-?\d+", tok):
        return int(tok)
    if re.fullmatch(r"[a-z_]\w*", tok):
        return tok
    raise DomainError(f"bad term {tok!r}")


def _split_top(body):
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return parts


def parse_query(text: str, source=None) -> UCQ:
    text = " ".join(ln.split("#", 1)[0] for ln in text.splitlines()).strip()
    if ":-" in text:
        head, text = text.split(":-", 1)
        if not re.fullmatch(r"\s*[A-Za-z_]\w*\s*(\(\s*\))?\s*", head):
            raise ParseError("query head must be nullary, like q()", 1, 1, source)
    disjuncts = []
    for part in text.split("|"):
        atoms, neqs = [], []
        for item in _split_top(part):
            if not item.strip():
                raise ParseError("empty conjunct", 1, None, source)
            try:
                m = _NEQ.fullmatch(item)
                if m:
                    neqs.append((_term(m.group(1)), _term(m.group(2))))
                    continue
                m = _ATOM.fullmatch(item)
                if not m:
                    raise ParseError(f"cannot parse {item.strip()!r}", 1, None, source)
                args = m.group(2).strip()
                terms = tuple(_term(t) for t in args.split(",")) if args else ()
                atoms.append((m.group(1), terms))
            except DomainError as e:
                raise ParseError(str(e), 1, None, source) from None
        cq = CQ(atoms, neqs)
        for a, b in neqs:
            for t in (a, b):
                if isinstance(t, str) and t not in cq.variables:
                    raise ParseError(f"inequality variable {t} occurs in no atom", 1, None,
                                     source)
        disjuncts.append(cq)
    return UCQ(disjuncts)


def matches(cq: CQ, db: Database):
    """All tuple-id sets witnessing ``cq`` in ``db`` (one per valuation)."""
    for rel, terms in cq.atoms:
        if rel not in db.arity:
            raise DomainError(f"relation {rel} is not in the database")
        if len(terms) != db.arity[rel]:
            raise DomainError(f"{rel} has arity {db.arity[rel]}, query uses {len(terms)}")
    for a, b in cq.neqs:
        for t in (a, b):
            if isinstance(t, str) and t not in cq.variables:
                raise DomainError(f"inequality variable {t} occurs in no atom")
    rels = {rel: db.relation(rel) for rel, _ in cq.atoms}
    out = []

    def value(t, env):
        return t if isinstance(t, int) else env.get(t)

    def search(i, env, used):
        if i == len(cq.atoms):
            if all(value(a, env) != value(b, env) for a, b in cq.neqs):
                out.append(frozenset(used))
            return
        rel, terms = cq.atoms[i]
        for vid, vals in rels[rel]:
            new = dict(env)
            ok = True
            for t, v in zip(terms, vals):
                if isinstance(t, int):
                    ok = t == v
                elif t in new:
                    ok = new[t] == v
                else:
                    new[t] = v
                if not ok:
                    break
            if ok:
                search(i + 1, new, used + [vid])

    search(0, {}, [])
    return out


def lineage(q: UCQ, db: Database):
    """Monotone Or-of-And circuit over the tuple variables of ``db``."""
    b = CircuitBuilder(db.pool)
    ands = []
    witnesses = sorted({w for cq in q.disjuncts for w in matches(cq, db)},
                       key=lambda s: (len(s), sorted(s)))
    inputs = {}
    for w in witnesses:
        gates = []
        for vid in sorted(w):
            if vid not in inputs:
                inputs[vid] = b.input(db.pool.name(vid), vid)
            gates.append(inputs[vid])
        ands.append(b.and_(*gates))
    if not ands:
        return b.build(b.const(0))
    return b.build(b.or_(*ands))


def random_instance(rng: random.Random, max_tuples=10, max_disjuncts=2, domain=3):
    """A random small (query, database) pair for property testing."""
    rels = {"R": rng.randint(1, 2), "S": rng.randint(1, 2), "T": 1}
    db = Database()
    for r, a in rels.items():
        db.declare(r, a)
    pool = [(r, vals) for r, a in rels.items()
            for vals in itertools.product(range(1, domain + 1), repeat=a)]
    for r, vals in rng.sample(pool, rng.randint(0, min(max_tuples, len(pool)))):
        db.add(r, vals)
    names = ["x", "y", "z"]
    disjuncts = []
    for _ in range(rng.randint(1, max_disjuncts)):
        atoms = []
        for _ in range(rng.randint(1, 3)):
            r = rng.choice(sorted(rels))
            terms = tuple(rng.choice(names) if rng.random() < 0.85 else rng.randint(1, domain)
                          for _ in range(rels[r]))
            atoms.append((r, terms))
        cq = CQ(atoms, [])
        vs = cq.variables
        if len(vs) >= 2 and rng.random() < 0.5:
            a, b = rng.sample(vs, 2)
            cq.neqs.append((a, b))
        disjuncts.append(cq)
    return UCQ(disjuncts), db


# -- the H family ---------------------------------------------------------

class HFamily:
    """Variable layout for ``H^i_{k,n}``, ``i = 0..k``.

    ``x_l`` has id ``l-1``, ``y_m`` id ``n+m-1`` and ``z^i_{l,m}`` id
    ``2n + (i-1)n^2 + (l-1)n + (m-1)`` (all indices 1-based).
    """

    def __init__(self, k: int, n: int):
        if k < 1 or n < 1:
            raise DomainError("k and n must be at least 1")
        self.k, self.n = k, n

    def x(self, l):
        return l - 1

    def y(self, m):
        return self.n + m - 1

    def z(self, i, l, m):
        n = self.n
        return 2 * n + (i - 1) * n * n + (l - 1) * n + (m - 1)

    @property
    def X(self):
        return tuple(self.x(l) for l in range(1, self.n + 1))

    @property
    def Y(self):
        return tuple(self.y(m) for m in range(1, self.n + 1))

    def Z(self, i):
        r = range(1, self.n + 1)
        return tuple(self.z(i, l, m) for l in r for m in r)

    def names(self):
        out = {self.x(l): f"x{l}" for l in range(1, self.n + 1)}
        out.update({self.y(m): f"y{m}" for m in range(1, self.n + 1)})
        r = range(1, self.n + 1)
        for i in range(1, self.k + 1):
            out.update({self.z(i, l, m): f"z{i}_{l}_{m}" for l in r for m in r})
        return out

    def pairs(self, i):
        """The conjunctions of ``H^i`` as (left var, right var) pairs."""
        if not 0 <= i <= self.k:
            raise DomainError(f"i must lie in 0..{self.k}")
        r = range(1, self.n + 1)
        if i == 0:
            return [(self.x(l), self.z(1, l, m)) for l in r for m in r]
        if i == self.k:
            return [(self.z(i, l, m), self.y(m)) for l in r for m in r]
        return [(self.z(i, l, m), self.z(i + 1, l, m)) for l in r for m in r]

    def blocks(self, i):
        """``(left block, right block)`` of ``H^i``."""
        if i == 0:
            return self.X, self.Z(1)
        if i == self.k:
            return self.Z(self.k), self.Y
        return self.Z(i), self.Z(i + 1)

    def vars(self, i):
        a, b = self.blocks(i)
        return tuple(sorted(a + b))

    def function(self, i):
        check_cap(len(self.vars(i)), f"H^{i}")
        pairs = self.pairs(i)
        return tabulate(self.vars(i), lambda c: np.logical_or.reduce(
            [c[a] & c[b] for a, b in pairs]))

    def circuit(self, i):
        names = self.names()
        b = CircuitBuilder(VarPool())
        gates = {}
        for v in self.vars(i):
            gates[v] = b.input(names[v], v)
        return b.build(b.or_(*[b.and_(gates[a], gates[c]) for a, c in self.pairs(i)]))

    def shared_vtree(self):
        """X-block, then Z^1..Z^k, then Y, each block a balanced subtree.

        Pruned to ``H^0`` it separates X from Z^1 at the root.
        """
        blocks = [self.X] + [self.Z(i) for i in range(1, self.k + 1)] + [self.Y]
        subs = [balanced_vtree(b).shape() for b in blocks]
        tree = subs[-1]
        for s in reversed(subs[:-1]):
            tree = (s, tree)
        return from_nested(tree)


def h_family(k: int, n: int, i: int):
    return HFamily(k, n).function(i)


def node_with_vars(tree, xs):
    xs = tuple(sorted(xs))
    for v in range(len(tree)):
        if tree.X[v] == xs:
            return v
    raise DomainError(f"no vtree node has variable set {xs}")


def balanced_node(tree, fam: HFamily):
    """A node whose share of ``X u Y`` lies in ``[2n/5, 4n/5]``.

    Walks from the root into the child holding more of ``X u Y`` and
    returns the last node still above ``|X u Y|/5``.
    """
    xy = set(fam.X) | set(fam.Y)
    count = [len(set(tree.Z[v]) & xy) for v in range(len(tree))]
    total = len(xy)
    v = tree.root
    while tree.children[v]:
        c = max(tree.children[v], key=lambda u: count[u])
        if 5 * count[c] <= total:
            break
        v = c
    n = fam.n
    ok = 2 * n <= 5 * count[v] <= 4 * n
    return v, count[v], ok


def _floor_check(fam, tree, forms, i, keep_left, keep_right, node_vars):
    """Condition ``forms[i]`` to ``keep_left u keep_right`` and check the floor."""
    vs = set(fam.vars(i))
    keep = set(keep_left) | set(keep_right)
    zero = {v: 0 for v in vs - keep}
    restricted = condition(forms[i], zero)
    node = node_with_vars(restricted.vtree, set(node_vars) & vs)
    rep = cover_lower_bound_check(restricted, node)
    rep["i"] = i
    rep["pairs"] = len(keep_left)
    rep["floor"] = (1 << len(keep_left)) - 1
    rep["ok"] = rep["ok"] and rep["rank"] >= rep["floor"] and forms[i].size >= rep["floor"]
    return rep


class _Mirror:
    """Relabelling ``x <-> y``, ``z^i_{l,m} <-> z^{k+1-i}_{m,l}``; maps ``H^i`` to ``H^{k-i}``."""

    def __init__(self, fam):
        self.fam, self.k, self.n = fam, fam.k, fam.n

    def x(self, l):
        return self.fam.y(l)

    def y(self, m):
        return self.fam.x(m)

    def z(self, i, l, m):
        return self.fam.z(self.k + 1 - i, m, l)

    def index(self, i):
        return self.k - i


def balance_floors(fam: HFamily, tree, forms):
    """Size floors forced by the balanced-node argument.

    ``forms[i]`` computes ``H^i`` over ``prune_to(tree, vars(H^i))``.  Picks
    a balanced node ``v`` and assumes (after mirroring if needed) that ``v``
    holds at least as many x's as y's.  If some column ``j`` has every
    ``z^1_{l,j}`` with ``x_l`` below ``v`` outside ``v``'s subtree, ``H^0``
    conditioned to those pairs needs ``2^{|X_v|} - 1`` rectangles at ``v``.
    Otherwise the pairs are split by the first layer leaving ``v``'s
    subtree and each ``H^p`` gets the floor of its share.
    """
    v, nv, ok = balanced_node(tree, fam)
    below = set(tree.Z[v])
    n, k = fam.n, fam.k
    nx = sum(fam.x(l) in below for l in range(1, n + 1))
    ny = sum(fam.y(m) in below for m in range(1, n + 1))
    lab = fam
    index = lambda i: i  # noqa: E731
    if nx < ny:
        lab = _Mirror(fam)
        index = lab.index
    report = {"node": v, "xy_below": nv, "balanced": ok, "mirrored": nx < ny, "checks": []}
    xv = [l for l in range(1, n + 1) if lab.x(l) in below]
    cols = [m for m in range(1, n + 1) if all(lab.z(1, l, m) not in below for l in xv)]
    if xv and cols:
        j = cols[0]
        left = [lab.x(l) for l in xv]
        right = [lab.z(1, l, j) for l in xv]
        report["case"] = "first-layer"
        report["checks"].append(_floor_check(fam, tree, forms, index(0), left, right, below))
        return report
    report["case"] = "layers"
    S = []
    for m in range(1, n + 1):
        if lab.y(m) in below:
            continue
        rows = [l for l in xv if lab.z(1, l, m) in below]
        if rows:
            S.append((rows[0], m))
    R = {p: [] for p in range(1, k + 1)}
    for l, m in S:
        p = next((p for p in range(1, k) if lab.z(p + 1, l, m) not in below), k)
        R[p].append((l, m))
    for p, pairs in R.items():
        if not pairs:
            continue
        left = [lab.z(p, l, m) for l, m in pairs]
        right = ([lab.z(p + 1, l, m) for l, m in pairs] if p < k
                 else [lab.y(m) for _, m in pairs])
        report["checks"].append(_floor_check(fam, tree, forms, index(p), left, right, below))
    return report


def hardness_experiment(k: int, n_range, compiler="sdd", auto_select=False, rng=None):
    """Compile every ``H^i_{k,n}`` under the shared vtree and check size floors.

    Without ``auto_select`` each ``H^i`` is checked at the cut between its
    two blocks (the root of the pruned shared vtree), where the floor is
    ``2^{n'} - 1`` with ``n'`` the number of disjoint pair groups.  With
    ``auto_select`` the balanced-node argument picks the cut instead; pass
    ``rng`` to draw a random shared vtree (only meaningful with
    ``auto_select``, since the block cuts need not exist in it).
    """
    if rng is not None and not auto_select:
        raise DomainError("random vtrees need auto_select")
    comp = compile_sdd if compiler == "sdd" else compile_dsnnf
    rows = []
    for n in n_range:
        fam = HFamily(k, n)
        if rng is None:
            tree = fam.shared_vtree()
        else:
            tree = random_vtree(sorted(fam.names()), rng)
        forms = {}
        for i in range(k + 1):
            f = fam.function(i)
            forms[i] = comp(f, prune_to(tree, f.vars), fam.names())
        if auto_select:
            rep = balance_floors(fam, tree, forms)
            for c in rep["checks"]:
                rows.append({"n": n, "i": c["i"], "size": forms[c["i"]].size,
                             "rank": c["rank"], "cover": c["cover"], "floor": c["floor"],
                             "node": rep["node"], "balanced": rep["balanced"],
                             "ok": c["ok"] and rep["balanced"]})
            continue
        for i in range(k + 1):
            form = forms[i]
            left, right = fam.blocks(i)
            node = node_with_vars(form.vtree, left)
            # groups of pairs sharing a right-hand variable give the rank
            groups = len({b for _, b in fam.pairs(i)}) if i == k else \
                len({a for a, _ in fam.pairs(i)})
            floor = (1 << groups) - 1
            row = {"n": n, "i": i, "size": form.size, "floor": floor, "node": node}
            try:
                rep = cover_lower_bound_check(form, node)
                row.update(rank=rep["rank"], cover=rep["cover"],
                           ok=rep["ok"] and rep["rank"] >= floor and form.size >= floor)
            except CapacityError as e:
                row.update(rank=None, cover=None, ok=form.size >= floor, note=str(e))
            rows.append(row)
    return rows


def experiment_csv(rows) -> str:
    cols = ["n", "i", "size", "rank", "cover", "floor", "ok"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r.get(c, "")) for c in cols))
    return "\n".join(lines) + "\n"
