"""Vtrees: construction, pruning, standard shapes and the ``.vtree`` format.

Nodes are numbered in postorder, so children always precede their parent
and the root is the last node.  Leaves carry a variable label; dummy
leaves carry negative labels (``-1, -2, ...``) which never clash with real
variable ids.  Internal nodes have one or two ordered children.

Text format, one statement per line (``#`` comments)::

    L <id> <var>        real leaf labelled by a variable name
    D <id>              dummy leaf
    U <id> <child>      node with a single child
    I <id> <left> <right>
    R <id>              root marker (required, exactly once)
"""

import random

from .boolfunc import VarPool, varset
from .errors import DomainError, ParseError
from .treedec import exact_decompose, make_nice, min_fill_decompose


class Vtree:
    """Immutable ordered tree over a set of variables (see module docstring)."""

    def __init__(self, children, labels, root, origin=None):
        # renumber reachable nodes in postorder from ``root``
        order = []
        stack = [(root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                order.append(v)
                continue
            stack.append((v, True))
            for c in reversed(children[v]):
                stack.append((c, False))
        index = {v: i for i, v in enumerate(order)}
        if len(index) != len(order):
            raise DomainError("vtree structure is not a tree")
        self.children = [tuple(index[c] for c in children[v]) for v in order]
        self.labels = [labels[v] for v in order]
        self.origin = [origin[v] for v in order] if origin is not None else list(range(len(order)))
        self.root = len(order) - 1
        self.parent = [-1] * len(order)
        for v, cs in enumerate(self.children):
            if len(cs) > 2:
                raise DomainError(f"vtree node has {len(cs)} children")
            if cs and self.labels[v] is not None:
                raise DomainError("internal vtree node carries a label")
            if not cs and self.labels[v] is None:
                raise DomainError("vtree leaf without a label")
            for c in cs:
                if self.parent[c] != -1:
                    raise DomainError("vtree node has two parents")
                self.parent[c] = v
        self.Z = []
        for v, cs in enumerate(self.children):
            if cs:
                z = [x for c in cs for x in self.Z[c]]
            else:
                z = [self.labels[v]]
            self.Z.append(tuple(sorted(z)))
        self.X = [tuple(x for x in z if x >= 0) for z in self.Z]
        allz = self.Z[self.root]
        if len(set(allz)) != len(allz):
            raise DomainError("vtree leaves carry a repeated label")
        self._leaf = {self.labels[v]: v for v in range(len(order)) if not self.children[v]}

    def __len__(self):
        return len(self.children)

    @property
    def vars(self) -> tuple:
        """Real variables of the whole tree."""
        return self.X[self.root]

    def is_leaf(self, v) -> bool:
        return not self.children[v]

    def is_dummy(self, v) -> bool:
        return self.is_leaf(v) and self.labels[v] < 0

    def left(self, v):
        return self.children[v][0]

    def right(self, v):
        return self.children[v][1]

    def leaves(self):
        return [v for v in range(len(self)) if self.is_leaf(v)]

    def internal_nodes(self):
        return [v for v in range(len(self)) if len(self.children[v]) == 2]

    def leaf_of(self, var):
        try:
            return self._leaf[var]
        except KeyError:
            raise DomainError(f"variable {var} is not a leaf of the vtree") from None

    def is_full(self) -> bool:
        """Binary with real leaves only (the shape the compilers accept)."""
        return all(len(cs) != 1 for cs in self.children) and \
            not any(self.is_dummy(v) for v in range(len(self)))

    def is_linear(self) -> bool:
        """Every left child of a two-child node is a leaf."""
        return self.is_full() and all(self.is_leaf(self.left(v)) for v in self.internal_nodes())

    def linear_order(self):
        """Variables top-down along the spine of a linear vtree."""
        if not self.is_linear():
            raise DomainError("vtree is not linear")
        out, v = [], self.root
        while not self.is_leaf(v):
            out.append(self.labels[self.left(v)])
            v = self.right(v)
        out.append(self.labels[v])
        return out

    def depth(self, v) -> int:
        d = 0
        while self.parent[v] != -1:
            v = self.parent[v]
            d += 1
        return d

    def shape(self):
        """Hashable nested-tuple description (labels at the leaves)."""
        memo = []
        for v, cs in enumerate(self.children):
            memo.append(tuple(memo[c] for c in cs) if cs else self.labels[v])
        return memo[self.root]

    def __eq__(self, other):
        return isinstance(other, Vtree) and self.shape() == other.shape()

    def __hash__(self):
        return hash(self.shape())

    def __repr__(self):
        return f"Vtree(nodes={len(self)}, vars={len(self.vars)})"


class Dummy:
    """Placeholder for a dummy leaf in :func:`from_nested`."""


def from_nested(nested) -> Vtree:
    """Build from nested tuples: ints are leaves, ``Dummy()`` dummy leaves."""
    children, labels = [], []
    next_dummy = [-1]

    def walk(obj):
        if isinstance(obj, tuple):
            if len(obj) not in (1, 2):
                raise DomainError("vtree nodes take one or two children")
            cs = tuple(walk(o) for o in obj)
            children.append(cs)
            labels.append(None)
        elif isinstance(obj, Dummy):
            children.append(())
            labels.append(next_dummy[0])
            next_dummy[0] -= 1
        else:
            if int(obj) < 0:
                raise DomainError("real variable ids are non-negative")
            children.append(())
            labels.append(int(obj))
        return len(children) - 1

    root = walk(nested)
    return Vtree(children, labels, root)


def linear_vtree(order) -> Vtree:
    """Right-linear vtree whose left leaves follow ``order``."""
    order = list(order)
    if not order:
        raise DomainError("linear vtree needs at least one variable")
    varset(order)
    children, labels = [()], [order[-1]]
    cur = 0
    for x in reversed(order[:-1]):
        children.append(())
        labels.append(x)
        children.append((len(children) - 1, cur))
        labels.append(None)
        cur = len(children) - 1
    return Vtree(children, labels, cur)


def balanced_vtree(vars_) -> Vtree:
    vars_ = list(varset(vars_))
    if not vars_:
        raise DomainError("vtree needs at least one variable")

    def split(xs):
        if len(xs) == 1:
            return xs[0]
        h = len(xs) // 2
        return (split(xs[:h]), split(xs[h:]))

    return from_nested(split(vars_))


def random_vtree(vars_, rng=None) -> Vtree:
    """Uniformly shuffled leaves with uniformly random split points."""
    rng = rng if rng is not None else random.Random(0)
    vars_ = list(varset(vars_))
    if not vars_:
        raise DomainError("vtree needs at least one variable")
    rng.shuffle(vars_)

    def split(xs):
        if len(xs) == 1:
            return xs[0]
        h = rng.randint(1, len(xs) - 1)
        return (split(xs[:h]), split(xs[h:]))

    return from_nested(split(vars_))


def vtree_from_nice_td(ntd, inputs) -> Vtree:
    """Vtree with the shape of a nice decomposition.

    ``inputs`` maps input-gate vertices to variable ids.  Leaves of ``ntd``
    become dummy leaves; the node forgetting an input gate gets a fresh
    real leaf as its left child and its original subtree as right child.
    """
    for g in inputs:
        if g not in ntd.forget_node:
            raise DomainError(f"input gate {g} is never forgotten")
    forgets_input = {ntd.forget_node[g]: x for g, x in inputs.items()}
    children, labels = [], []
    built = {}
    dummy = -1
    for t in ntd.postorder():
        kind = ntd.kinds[t]
        if kind == "leaf":
            children.append(())
            labels.append(dummy)
            dummy -= 1
        else:
            sub = tuple(built[c] for c in ntd.children[t])
            if t in forgets_input:
                children.append(())
                labels.append(forgets_input[t])
                sub = (len(children) - 1,) + sub
            children.append(sub)
            labels.append(None)
        built[t] = len(children) - 1
    return Vtree(children, labels, built[ntd.root])


def derive_vtree(circuit, exact=False):
    """Vtree (with dummy leaves) from a nice decomposition of the circuit graph.

    Returns ``(vtree, nice_td)``.  ``exact`` uses a minimum-width
    decomposition instead of the min-fill heuristic.
    """
    graph = circuit.underlying_graph()
    td = exact_decompose(graph) if exact else min_fill_decompose(graph)
    ntd = make_nice(td, graph)
    return vtree_from_nice_td(ntd, circuit.input_gates()), ntd


def prune_to(tree: Vtree, X) -> Vtree:
    """Drop leaves outside ``X`` (dummies included) and contract unary nodes."""
    X = set(X)
    if not X:
        raise DomainError("cannot prune to an empty variable set")
    missing = X - set(tree.vars)
    if missing:
        raise DomainError(f"variables {sorted(missing)} are not leaves of the vtree")
    children, labels, origin = [], [], []
    kept = [None] * len(tree)
    for v in range(len(tree)):
        cs = tree.children[v]
        if not cs:
            if tree.labels[v] in X:
                children.append(())
                labels.append(tree.labels[v])
                origin.append(tree.origin[v])
                kept[v] = len(children) - 1
            continue
        sub = [kept[c] for c in cs if kept[c] is not None]
        if len(sub) == 1:
            kept[v] = sub[0]
        elif len(sub) == 2:
            children.append(tuple(sub))
            labels.append(None)
            origin.append(tree.origin[v])
            kept[v] = len(children) - 1
    return Vtree(children, labels, kept[tree.root], origin)


def isa_vtree(k: int, m: int):
    """Vtree for the indirect-storage function with parameters ``(k, m)``.

    Variables ``y_1..y_k`` get ids ``0..k-1`` and ``z_1..z_{2^m}`` ids
    ``k..k+2^m-1``.  Returns ``(vtree, names)``.
    """
    check_isa_params(k, m)
    nz = 1 << m
    ys = list(range(k))
    zs = [k + j for j in range(nz)]
    ztree = zs[0]
    for z in zs[1:]:
        ztree = (ztree, z)
    tree = ztree
    for y in reversed(ys):
        tree = (y, tree)
    names = {y: f"y{y + 1}" for y in ys}
    names.update({k + j: f"z{j + 1}" for j in range(nz)})
    return from_nested(tree), names


def check_isa_params(k, m):
    if not (isinstance(k, int) and isinstance(m, int)) or k < 1 or m < 1:
        raise DomainError("k and m must be positive integers")
    if (1 << k) * m != (1 << m):
        raise DomainError(f"(k, m) = ({k}, {m}) violates 2^k * m = 2^m")


def isa_nodes(tree: Vtree, k: int, m: int):
    """``(w, v)``: ``w[i]`` has left child ``y_i``, ``v[j]`` right child ``z_j``.

    Indices are 1-based as in the usual presentation; ``v`` has no entry
    for ``j = 1`` because ``z_1`` is a left child.
    """
    w = {i: tree.parent[tree.leaf_of(i - 1)] for i in range(1, k + 1)}
    v = {j: tree.parent[tree.leaf_of(k + j - 1)] for j in range(2, (1 << m) + 1)}
    return w, v


def parse_vtree(text: str, pool=None, source=None):
    """Parse the ``.vtree`` format; returns ``(vtree, pool)``."""
    pool = pool if pool is not None else VarPool()
    children, labels = {}, {}
    root = None
    dummy = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        op = toks[0]
        try:
            nid = int(toks[1]) if len(toks) > 1 else None
        except ValueError:
            raise ParseError(f"bad node id {toks[1]!r}", lineno, None, source) from None
        expect = {"L": 3, "D": 2, "U": 3, "I": 4, "R": 2}
        if op not in expect:
            raise ParseError(f"unknown vtree statement {op!r}", lineno, 1, source)
        if len(toks) != expect[op]:
            raise ParseError(f"'{op}' takes {expect[op] - 1} arguments", lineno, 1, source)
        if op == "R":
            if root is not None:
                raise ParseError("duplicate root marker", lineno, 1, source)
            root = nid
            continue
        if nid in children:
            raise ParseError(f"vtree node {nid} defined twice", lineno, 1, source)
        try:
            if op == "L":
                children[nid] = ()
                labels[nid] = pool.add(toks[2])
            elif op == "D":
                children[nid] = ()
                labels[nid] = dummy
                dummy -= 1
            elif op == "U":
                children[nid] = (int(toks[2]),)
                labels[nid] = None
            else:
                children[nid] = (int(toks[2]), int(toks[3]))
                labels[nid] = None
        except ValueError:
            raise ParseError("child ids must be integers", lineno, None, source) from None
    if root is None:
        raise ParseError("missing root marker 'R <id>'", source=source)
    for nid, cs in children.items():
        for c in cs:
            if c not in children:
                raise ParseError(f"node {nid} references undefined node {c}", source=source)
    if root not in children:
        raise ParseError(f"root {root} is undefined", source=source)
    ids = sorted(children)
    index = {nid: i for i, nid in enumerate(ids)}
    try:
        tree = Vtree([tuple(index[c] for c in children[nid]) for nid in ids],
                     [labels[nid] for nid in ids], index[root])
    except DomainError as e:
        raise ParseError(str(e), source=source) from None
    if len(tree) != len(ids):
        raise ParseError("some vtree nodes are unreachable from the root", source=source)
    return tree, pool


def vtree_lines(tree: Vtree, names=None):
    names = names or {}
    lines = []
    for v, cs in enumerate(tree.children):
        if not cs:
            lab = tree.labels[v]
            if lab < 0:
                lines.append(f"D {v}")
            else:
                lines.append(f"L {v} {names.get(lab, f'x{lab}')}")
        elif len(cs) == 1:
            lines.append(f"U {v} {cs[0]}")
        else:
            lines.append(f"I {v} {cs[0]} {cs[1]}")
    lines.append(f"R {tree.root}")
    return lines


def write_vtree(tree: Vtree, names=None) -> str:
    return "\n".join(vtree_lines(tree, names)) + "\n"
