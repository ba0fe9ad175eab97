"""The indirect storage access function and its small explicit SDD.

``ISA(y_1..y_k, z_1..z_{2^m})`` with ``2^k m = 2^m``: the y-bits select a
block ``i`` of ``m`` z-variables, that block selects an index ``j`` and the
output is ``z_j``.  Binary numbers are read most significant bit first.

The SDD respects :func:`twsdd.vtree.isa_vtree`: an OBDD over the y's on
top, one sentential decision per y-assignment at the root of the z-part
whose primes are terms on at most ``m + 1`` variables, and each such term
expanded into a decision at the node of its last variable.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .analysis import gate_vars
from .boolfunc import tabulate
from .errors import check_cap
from .form import Form
from .vtree import check_isa_params, isa_nodes, isa_vtree


@dataclass(frozen=True)
class IsaParams:
    k: int
    m: int

    def __post_init__(self):
        check_isa_params(self.k, self.m)

    @property
    def n(self) -> int:
        return self.k + (1 << self.m)

    @property
    def nz(self) -> int:
        return 1 << self.m

    def y(self, i) -> int:
        """Variable id of ``y_i`` (1-based)."""
        return i - 1

    def z(self, j) -> int:
        """Variable id of ``z_j`` (1-based)."""
        return self.k + j - 1

    def block(self, i):
        """1-based z-indices of the ``i``-th block of ``m`` address bits."""
        return [(i - 1) * self.m + t for t in range(1, self.m + 1)]


def to_number(bits) -> int:
    """Most significant bit first."""
    out = 0
    for b in bits:
        out = 2 * out + int(b)
    return out


def to_bits(value, width):
    return tuple((value >> (width - 1 - t)) & 1 for t in range(width))


def _params(p, m=None):
    if isinstance(p, IsaParams):
        return p
    return IsaParams(p, m)


def isa_function(p, m=None):
    """Truth table of ISA over ids ``y_i -> i-1``, ``z_j -> k+j-1``."""
    p = _params(p, m)
    check_cap(p.n, "ISA")
    vars_ = tuple(range(p.n))

    def fn(c):
        ys = [c[p.y(i)].astype(np.int64) for i in range(1, p.k + 1)]
        zs = np.stack([c[p.z(j)] for j in range(1, p.nz + 1)])
        i = np.zeros_like(ys[0])
        for b in ys:
            i = 2 * i + b
        cols = np.arange(zs.shape[1])
        j = np.zeros_like(i)
        for t in range(p.m):
            j = 2 * j + zs[i * p.m + t, cols]
        return zs[j, cols]

    return tabulate(vars_, fn)


# -- the top decision for one y-assignment -----------------------------------

def _term(pairs):
    """Canonical term from (z-index, value) pairs, or None if contradictory."""
    out = {}
    for j, v in pairs:
        if out.setdefault(j, v) != v:
            return None
    return tuple(sorted(out.items()))


def top_decision(p: IsaParams, ybits):
    """``[(term, sub)]`` for the cofactor at the y-assignment ``ybits``.

    Terms are tuples of ``(z-index, value)`` over ``z_1..z_{2^m - 1}``; a
    sub is ``"false"``, ``"true"``, ``"pos"`` (``z_{2^m}``) or ``"neg"``.
    """
    nz, m = p.nz, p.m
    i = to_number(ybits) + 1
    out = {}

    def add(pairs, sub):
        t = _term(pairs)
        if t is None:
            return
        if out.setdefault(t, sub) != sub:
            raise AssertionError(f"term {t} given two subs")

    if i == 1 << p.k:
        # the last block ends at z_{2^m}; the prefix a fixes j to 2i-1 or 2i
        prefix = p.block(i)[:-1]
        for a in itertools.product((0, 1), repeat=m - 1):
            i2 = to_number(a + (1,)) // 2 + 1
            lo, hi = 2 * i2 - 1, 2 * i2
            for c_lo, c_hi in itertools.product((0, 1), repeat=2):
                pairs = list(zip(prefix, a)) + [(lo, c_lo)]
                if hi == nz:
                    # c_hi is z_{2^m} itself: output z_{2^m} when it is 1
                    if c_hi == 0:
                        continue
                    add(pairs, "true" if c_lo else "pos")
                    continue
                pairs.append((hi, c_hi))
                sub = {(0, 0): "false", (0, 1): "pos", (1, 0): "neg", (1, 1): "true"}
                add(pairs, sub[c_lo, c_hi])
    else:
        addr = p.block(i)
        for b in itertools.product((0, 1), repeat=m):
            j = to_number(b) + 1
            pairs = list(zip(addr, b))
            if j == nz:
                add(pairs, "pos")
                continue
            for c in (0, 1):
                add(pairs + [(j, c)], "true" if c else "false")
    return sorted(out.items())


def isa_sdd(p, m=None) -> Form:
    """Explicit SDD for ISA over :func:`isa_vtree`; see the module docstring."""
    p = _params(p, m)
    tree, names = isa_vtree(p.k, p.m)
    w, v = isa_nodes(tree, p.k, p.m)
    form = Form(tree, "sdd", names)
    last = p.z(p.nz)
    subs = {"false": form.false(), "true": form.true(),
            "pos": form.lit(last, True), "neg": form.lit(last, False)}
    memo = {}

    def term_gate(t):
        # a term on z_{j_1} < ... < z_{j_l} decides its last variable at v_{j_l}
        if t in memo:
            return memo[t]
        if not t:
            g = form.true()
        elif len(t) == 1:
            g = form.lit(p.z(t[0][0]), bool(t[0][1]))
        else:
            *head, (jl, cl) = t
            idx = [j for j, _ in head]
            vals = tuple(c for _, c in head)
            lit = form.lit(p.z(jl), bool(cl))
            ands = []
            for b in itertools.product((0, 1), repeat=len(idx)):
                prime = term_gate(tuple(zip(idx, b)))
                ands.append(form.and_(v[jl], prime, lit if b == vals else form.false()))
            g = form.or_(v[jl], ands)
        memo[t] = g
        return g

    root_z = v[p.nz]
    level = {}
    for ybits in itertools.product((0, 1), repeat=p.k):
        ands = [form.and_(root_z, term_gate(t), subs[s]) for t, s in top_decision(p, ybits)]
        level[ybits] = form.or_(root_z, ands)
    for i in range(p.k, 0, -1):
        nxt = {}
        for prefix in itertools.product((0, 1), repeat=i - 1):
            ands = [form.and_(w[i], form.lit(p.y(i), bool(b)), level[prefix + (b,)])
                    for b in (0, 1)]
            nxt[prefix] = form.or_(w[i], ands)
        level = nxt
    return form.finish(level[()])


# -- size audit ----------------------------------------------------------

def small_term_count(m: int) -> int:
    return 3 ** (m + 1) + 1


def isa_size_constant() -> int:
    """``C`` with ``|SDD| <= C * n^{13/5}`` from the explicit gate counts.

    With ``3^m <= n^{8/5}``, ``2n + 2 <= 4n`` and ``2^k <= n``:
    v-structured ands ``<= 16 n^{13/5}``, w-structured ands ``<= 2n``,
    or gates ``<= 4 n^{8/5} + 2n`` and inputs ``<= 4n``.
    """
    return 16 + 2 + 4 + 2 + 4


def isa_size_audit(form: Form, p, m=None) -> dict:
    """Gate counts by node class against the explicit bounds."""
    p = _params(p, m)
    w, v = isa_nodes(form.vtree, p.k, p.m)
    wnodes, vnodes = set(w.values()), set(v.values())
    gv = gate_vars(form)
    zvars = {p.z(j) for j in range(1, p.nz + 1)}
    counts = {"and_w": 0, "and_v": 0, "or": 0, "input": 0, "other": 0}
    max_prime_vars = 0
    for g, (kind, args, node) in enumerate(zip(form.kinds, form.args, form.nodes)):
        if kind == "and":
            if node in wnodes:
                counts["and_w"] += 1
            elif node in vnodes:
                counts["and_v"] += 1
                max_prime_vars = max(max_prime_vars, len(set(gv[args[0]]) & zvars))
            else:
                counts["other"] += 1
        elif kind == "or":
            counts["or"] += 1
        else:
            counts["input"] += 1
    n = p.n
    bounds = {
        "and_v": small_term_count(p.m) * (2 * n + 2),
        "and_w": (1 << (p.k + 1)) - 2,
        "input": 2 * n + 2,
        "prime_vars": p.m + 1,
        "size": isa_size_constant() * n ** 2.6,
    }
    checks = {
        "and_v": counts["and_v"] <= bounds["and_v"],
        "and_w": counts["and_w"] <= bounds["and_w"],
        "input": counts["input"] <= bounds["input"],
        "prime_vars": max_prime_vars <= bounds["prime_vars"],
        "no_other_ands": counts["other"] == 0,
        "size": form.size <= bounds["size"],
    }
    return {"k": p.k, "m": p.m, "n": n, "size": form.size, "counts": counts,
            "max_prime_vars": max_prime_vars, "bounds": bounds, "checks": checks,
            "ok": all(checks.values())}
