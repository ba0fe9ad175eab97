"""Compiled forms: structured NNF DAGs annotated with vtree nodes.

Gate kinds:

* ``false`` / ``true`` -- constants; ``node`` is the vtree node whose scope
  the constant stands for, or ``None`` for a shared unscoped constant.
* ``lit`` -- ``args = (var, positive)``.
* ``and`` -- ``args = (left, right)``, ``node`` the structuring vtree node.
* ``or`` -- ``args`` the tuple of children, ``node`` the vtree node whose
  scope the disjunction ranges over.

Text format (``.sdd`` / ``.dnnf``), gates listed children-first::

    twsdd-form 1 <kind>
    <vtree lines as in the .vtree format>
    t <g> <node|->
    f <g> <node|->
    l <g> <var-name> <0|1>
    a <g> <node> <left> <right>
    o <g> <node|-> <child>...
    out <g>
"""

from .boolfunc import VarPool
from .errors import DomainError, ParseError
from .vtree import parse_vtree, vtree_lines

FORM_KINDS = ("dsnnf", "sdd")


class Form:
    """Hash-consed gate store; compact it with :meth:`finish` once built."""

    def __init__(self, vtree, kind, names=None):
        if kind not in FORM_KINDS:
            raise DomainError(f"unknown form kind {kind!r}")
        self.vtree = vtree
        self.kind = kind
        self.names = dict(names) if names else {}
        self.kinds = []
        self.args = []
        self.nodes = []
        self.output = None
        self.vars = vtree.vars if vtree is not None else ()
        self._index = {}

    def _add(self, kind, args, node):
        key = (kind, args, node)
        g = self._index.get(key)
        if g is None:
            g = len(self.kinds)
            self._index[key] = g
            self.kinds.append(kind)
            self.args.append(args)
            self.nodes.append(node)
        return g

    def true(self, node=None):
        return self._add("true", (), node)

    def false(self, node=None):
        return self._add("false", (), node)

    def lit(self, var, positive=True):
        return self._add("lit", (var, bool(positive)), None)

    def and_(self, node, left, right):
        return self._add("and", (left, right), node)

    def or_(self, node, children):
        return self._add("or", tuple(children), node)

    def children(self, g):
        k = self.kinds[g]
        return self.args[g] if k in ("and", "or") else ()

    def __len__(self):
        return len(self.kinds)

    @property
    def size(self) -> int:
        """Number of gates (only reachable gates remain after ``finish``)."""
        return len(self.kinds)

    def edge_count(self) -> int:
        return sum(len(self.children(g)) for g in range(len(self)))

    def finish(self, output):
        """Keep gates reachable from ``output`` and renumber them canonically.

        The numbering is the postorder of a depth-first walk visiting
        children in their stored order, so equal constructions give
        identical gate lists.
        """
        order, state = [], {}
        stack = [(output, 0)]
        while stack:
            g, i = stack.pop()
            cs = self.children(g)
            if i == 0:
                if g in state:
                    continue
                state[g] = 1
            if i < len(cs):
                stack.append((g, i + 1))
                if cs[i] not in state:
                    stack.append((cs[i], 0))
            else:
                order.append(g)
        index = {g: i for i, g in enumerate(order)}
        kinds, args, nodes = [], [], []
        for g in order:
            k = self.kinds[g]
            kinds.append(k)
            nodes.append(self.nodes[g])
            if k in ("and", "or"):
                args.append(tuple(index[c] for c in self.args[g]))
            else:
                args.append(self.args[g])
        self.kinds, self.args, self.nodes = kinds, args, nodes
        self._index = {(k, a, n): i for i, (k, a, n) in enumerate(zip(kinds, args, nodes))}
        self.output = index[output]
        return self

    def ands_by_node(self) -> dict:
        """vtree node -> number of distinct ``and`` gates it structures."""
        out = {}
        for k, n in zip(self.kinds, self.nodes):
            if k == "and":
                out[n] = out.get(n, 0) + 1
        return out

    def width(self) -> int:
        return max(self.ands_by_node().values(), default=0)

    def signature(self):
        """Hashable description; equal signatures mean identical DAGs."""
        return (self.kind, self.vtree.shape() if self.vtree is not None else None,
                tuple(self.kinds), tuple(self.args), tuple(self.nodes), self.output)

    def var_name(self, v):
        return self.names.get(v, f"x{v}")

    def to_text(self) -> str:
        lines = [f"twsdd-form 1 {self.kind}"]
        lines += vtree_lines(self.vtree, self.names)
        for g, (k, a, n) in enumerate(zip(self.kinds, self.args, self.nodes)):
            node = "-" if n is None else str(n)
            if k == "true":
                lines.append(f"t {g} {node}")
            elif k == "false":
                lines.append(f"f {g} {node}")
            elif k == "lit":
                lines.append(f"l {g} {self.var_name(a[0])} {int(a[1])}")
            elif k == "and":
                lines.append(f"a {g} {node} {a[0]} {a[1]}")
            else:
                lines.append(f"o {g} {node} " + " ".join(map(str, a)))
        lines.append(f"out {self.output}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"Form(kind={self.kind}, size={self.size}, vars={len(self.vars)})"


def parse_form(text: str, pool=None, source=None) -> Form:
    """Read a form written by :meth:`Form.to_text`."""
    pool = pool if pool is not None else VarPool()
    lines = text.splitlines()
    body = [(i + 1, ln.split("#", 1)[0].split()) for i, ln in enumerate(lines)]
    body = [(i, t) for i, t in body if t]
    if not body or body[0][1][:2] != ["twsdd-form", "1"] or len(body[0][1]) != 3:
        raise ParseError("expected header 'twsdd-form 1 <kind>'", 1, 1, source)
    kind = body[0][1][2]
    if kind not in FORM_KINDS:
        raise ParseError(f"unknown form kind {kind!r}", body[0][0], None, source)
    vt_text = "\n".join(" ".join(t) for _, t in body[1:] if t[0] in ("L", "D", "U", "I", "R"))
    tree, pool = parse_vtree(vt_text, pool, source)
    names = {pool.id(n): n for n in pool.names().values()}
    form = Form(tree, kind, names)
    seen = {}
    output = None

    def node_ref(tok, lineno):
        if tok == "-":
            return None
        try:
            v = int(tok)
        except ValueError:
            raise ParseError(f"bad vtree node {tok!r}", lineno, None, source) from None
        if not 0 <= v < len(tree):
            raise ParseError(f"vtree node {v} out of range", lineno, None, source)
        return v

    def gate_ref(tok, lineno):
        try:
            g = int(tok)
        except ValueError:
            raise ParseError(f"bad gate id {tok!r}", lineno, None, source) from None
        if g not in seen:
            raise ParseError(f"gate {g} used before definition", lineno, None, source)
        return seen[g]

    for lineno, toks in body[1:]:
        op = toks[0]
        if op in ("L", "D", "U", "I", "R"):
            continue
        if op == "out":
            if len(toks) != 2:
                raise ParseError("expected 'out <g>'", lineno, 1, source)
            output = gate_ref(toks[1], lineno)
            continue
        if op not in ("t", "f", "l", "a", "o") or len(toks) < 3:
            raise ParseError(f"malformed gate line starting {op!r}", lineno, 1, source)
        try:
            gid = int(toks[1])
        except ValueError:
            raise ParseError(f"bad gate id {toks[1]!r}", lineno, None, source) from None
        if gid in seen:
            raise ParseError(f"gate {gid} defined twice", lineno, 1, source)
        if op in ("t", "f"):
            if len(toks) != 3:
                raise ParseError("constants take one node field", lineno, 1, source)
            n = node_ref(toks[2], lineno)
            g = form.true(n) if op == "t" else form.false(n)
        elif op == "l":
            if len(toks) != 4 or toks[3] not in ("0", "1"):
                raise ParseError("expected 'l <g> <var> <0|1>'", lineno, 1, source)
            if toks[2] not in pool:
                raise ParseError(f"variable {toks[2]!r} is not in the vtree", lineno, None, source)
            g = form.lit(pool.id(toks[2]), toks[3] == "1")
        elif op == "a":
            if len(toks) != 5:
                raise ParseError("expected 'a <g> <node> <left> <right>'", lineno, 1, source)
            g = form.and_(node_ref(toks[2], lineno), gate_ref(toks[3], lineno),
                          gate_ref(toks[4], lineno))
        else:
            g = form.or_(node_ref(toks[2], lineno), [gate_ref(t, lineno) for t in toks[3:]])
        seen[gid] = g
    if output is None:
        raise ParseError("missing 'out' line", source=source)
    return form.finish(output)
