"""Boolean circuits over the standard basis, their text formats, and graphs.

Circuit text format (``.bc``), one statement per line, ``#`` starts a
comment::

    v <n>                       number of distinct input variables
    g<i> input <name>
    g<i> const 0|1
    g<i> not g<j>
    g<i> and g<j> [g<k> ...]
    g<i> or g<j> [g<k> ...]
    out g<i>

Gate labels are ``g`` followed by a non-negative integer and may be
referenced before they are defined.  ``and``/``or`` take at least one
child and no child twice; ``not`` takes exactly one.
"""

from collections import namedtuple

import numpy as np

from .boolfunc import STORE, VarPool, _column, varset
from .errors import DomainError, ParseError, check_cap

Gate = namedtuple("Gate", "kind arg")
Gate.__doc__ = """kind in {'input','const','not','and','or'}; arg is the
variable id, the constant bit, or the tuple of child gate indices."""

KINDS = ("input", "const", "not", "and", "or")


class UndirectedGraph:
    """Simple undirected graph on vertices ``0..n-1`` (loops allowed)."""

    def __init__(self, n: int, edges=()):
        self.n = n
        self.adj = [set() for _ in range(n)]
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u, v):
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise DomainError(f"edge ({u}, {v}) out of range")
        self.adj[u].add(v)
        self.adj[v].add(u)

    def edges(self):
        out = []
        for u in range(self.n):
            for v in self.adj[u]:
                if u <= v:
                    out.append((u, v))
        return sorted(out)

    def edge_count(self) -> int:
        return len(self.edges())

    def neighbors(self, v):
        return self.adj[v]

    def subgraph(self, vertices):
        vertices = sorted(vertices)
        index = {v: i for i, v in enumerate(vertices)}
        g = UndirectedGraph(len(vertices))
        for u, v in self.edges():
            if u in index and v in index:
                g.add_edge(index[u], index[v])
        return g, vertices

    def __repr__(self):
        return f"UndirectedGraph(n={self.n}, edges={self.edge_count()})"


class Circuit:
    """Immutable gate DAG; ``gates`` are stored in topological order."""

    def __init__(self, gates, output: int, names=None):
        self.gates = tuple(Gate(kind, tuple(arg) if kind in ("and", "or") else arg)
                           for kind, arg in gates)
        self.output = output
        self._validate()
        vs = [g.arg for g in self.gates if g.kind == "input"]
        self.vars = varset(vs)
        self.names = dict(names) if names else {v: f"x{v}" for v in self.vars}
        self._var_cache = {}

    def _validate(self):
        seen_vars = set()
        if not 0 <= self.output < len(self.gates):
            raise DomainError(f"output gate {self.output} out of range")
        for i, g in enumerate(self.gates):
            if g.kind not in KINDS:
                raise DomainError(f"gate {i}: unknown kind {g.kind!r}")
            if g.kind == "input":
                if g.arg in seen_vars:
                    raise DomainError(f"gate {i}: variable {g.arg} has two input gates")
                seen_vars.add(g.arg)
            elif g.kind == "const":
                if g.arg not in (0, 1):
                    raise DomainError(f"gate {i}: constant must be 0 or 1")
            elif g.kind == "not":
                if not 0 <= g.arg < i:
                    raise DomainError(f"gate {i}: child {g.arg} is not an earlier gate")
            else:
                if not g.arg:
                    raise DomainError(f"gate {i}: {g.kind} needs at least one child")
                if len(set(g.arg)) != len(g.arg):
                    raise DomainError(f"gate {i}: repeated child")
                for c in g.arg:
                    if not 0 <= c < i:
                        raise DomainError(f"gate {i}: child {c} is not an earlier gate")

    def __len__(self):
        return len(self.gates)

    def children(self, i: int) -> tuple:
        g = self.gates[i]
        if g.kind == "not":
            return (g.arg,)
        if g.kind in ("and", "or"):
            return g.arg
        return ()

    def wires(self):
        """All (child, parent) pairs."""
        return [(c, i) for i in range(len(self.gates)) for c in self.children(i)]

    def input_gates(self) -> dict:
        """Map input gate index -> variable id."""
        return {i: g.arg for i, g in enumerate(self.gates) if g.kind == "input"}

    def reachable(self):
        seen = {self.output}
        stack = [self.output]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def subcircuit_vars(self, i: int) -> tuple:
        """Variables appearing at input gates below gate ``i`` (memoised)."""
        if i in self._var_cache:
            return self._var_cache[i]
        for j in range(i + 1):
            if j in self._var_cache:
                continue
            g = self.gates[j]
            if g.kind == "input":
                vs = (g.arg,)
            elif g.kind == "const":
                vs = ()
            else:
                vs = tuple(sorted(set().union(*(self._var_cache[c] for c in self.children(j)))))
            self._var_cache[j] = vs
        return self._var_cache[i]

    def to_function(self, vars_=None):
        """Exact semantics as an interned BoolFunc over ``vars_`` (default ``self.vars``)."""
        vars_ = self.vars if vars_ is None else varset(vars_)
        missing = set(self.vars) - set(vars_)
        if missing:
            raise DomainError(f"variables {sorted(missing)} missing from target set")
        n = len(vars_)
        check_cap(n, "circuit")
        pos = {v: i for i, v in enumerate(vars_)}
        live = self.reachable()
        uses = [0] * len(self.gates)
        for c, p in self.wires():
            if p in live:
                uses[c] += 1
        size = 1 << n
        vals = {}
        for i, g in enumerate(self.gates):
            if i not in live:
                continue
            if g.kind == "input":
                val = _column(n, pos[g.arg])
            elif g.kind == "const":
                val = np.full(size, bool(g.arg))
            elif g.kind == "not":
                val = ~vals[g.arg]
            else:
                op = np.logical_and if g.kind == "and" else np.logical_or
                val = vals[g.arg[0]].copy()
                for c in g.arg[1:]:
                    op(val, vals[c], out=val)
            for c in self.children(i):
                uses[c] -= 1
                if uses[c] == 0 and c != self.output:
                    del vals[c]
            vals[i] = val
        return STORE.intern(vars_, vals[self.output])

    def underlying_graph(self) -> UndirectedGraph:
        """One vertex per gate, one undirected edge per wire."""
        return UndirectedGraph(len(self.gates), self.wires())

    def to_text(self) -> str:
        lines = [f"v {len(self.vars)}"]
        for i, g in enumerate(self.gates):
            if g.kind == "input":
                lines.append(f"g{i} input {self.names[g.arg]}")
            elif g.kind == "const":
                lines.append(f"g{i} const {g.arg}")
            elif g.kind == "not":
                lines.append(f"g{i} not g{g.arg}")
            else:
                lines.append(f"g{i} {g.kind} " + " ".join(f"g{c}" for c in g.arg))
        lines.append(f"out g{self.output}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"Circuit(gates={len(self.gates)}, vars={len(self.vars)})"


class CircuitBuilder:
    """Incremental construction helper; gates are hash-consed."""

    def __init__(self, pool=None):
        self.pool = pool if pool is not None else VarPool()
        self.gates = []
        self._index = {}
        self.names = {}

    def _add(self, kind, arg):
        key = (kind, arg)
        if key not in self._index:
            self._index[key] = len(self.gates)
            self.gates.append(Gate(kind, arg))
        return self._index[key]

    def input(self, name, vid=None):
        if vid is None:
            vid = self.pool.add(name)
        self.names[vid] = name
        return self._add("input", vid)

    def const(self, bit):
        return self._add("const", int(bool(bit)))

    def not_(self, child):
        return self._add("not", child)

    def and_(self, *children):
        children = tuple(dict.fromkeys(children))
        if not children:
            return self.const(1)
        if len(children) == 1:
            return children[0]
        return self._add("and", children)

    def or_(self, *children):
        children = tuple(dict.fromkeys(children))
        if not children:
            return self.const(0)
        if len(children) == 1:
            return children[0]
        return self._add("or", children)

    def build(self, output) -> Circuit:
        return Circuit(self.gates, output, self.names)


def _topo_order(labels, children, where):
    order, state = [], {}
    for root in labels:
        if root in state:
            continue
        stack = [(root, iter(children[root]))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            for c in it:
                if c not in children:
                    raise ParseError(f"g{node} references undefined gate g{c}", *where[node])
                st = state.get(c)
                if st == 1:
                    raise ParseError(f"cycle through gate g{c}", *where[node])
                if st is None:
                    state[c] = 1
                    stack.append((c, iter(children[c])))
                    break
            else:
                stack.pop()
                state[node] = 2
                order.append(node)
    return order


def parse_circuit(text: str, pool=None, source=None) -> Circuit:
    """Parse the ``.bc`` format described in the module docstring."""
    pool = pool if pool is not None else VarPool()
    defs, where, children = {}, {}, {}
    declared = None
    output = None
    names_seen = {}

    def gate_ref(tok, lineno, col):
        if len(tok) < 2 or tok[0] != "g" or not tok[1:].isdigit():
            raise ParseError(f"expected a gate label like g3, got {tok!r}", lineno, col, source)
        return int(tok[1:])

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = line.split()
        if not toks:
            continue
        cols = []
        start = 0
        for t in toks:
            start = line.index(t, start)
            cols.append(start + 1)
            start += len(t)
        head = toks[0]
        if head == "v":
            if declared is not None:
                raise ParseError("duplicate v header", lineno, 1, source)
            if len(toks) != 2 or not toks[1].isdigit():
                raise ParseError("header must be 'v <n>'", lineno, 1, source)
            declared = int(toks[1])
            continue
        if head == "out":
            if len(toks) != 2:
                raise ParseError("expected 'out g<i>'", lineno, 1, source)
            if output is not None:
                raise ParseError("duplicate out statement", lineno, 1, source)
            output = gate_ref(toks[1], lineno, cols[1])
            continue
        label = gate_ref(head, lineno, 1)
        if label in defs:
            raise ParseError(f"gate g{label} defined twice", lineno, 1, source)
        if len(toks) < 2:
            raise ParseError(f"gate g{label} has no kind", lineno, len(line) + 1, source)
        kind, args = toks[1], toks[2:]
        where[label] = (lineno, 1, source)
        if kind == "input":
            if len(args) != 1:
                raise ParseError("input takes exactly one variable name", lineno, cols[1], source)
            name = args[0]
            if name in names_seen:
                raise ParseError(
                    f"variable {name!r} already has input gate g{names_seen[name]}",
                    lineno, cols[2], source)
            names_seen[name] = label
            defs[label] = ("input", name)
            children[label] = ()
        elif kind == "const":
            if len(args) != 1 or args[0] not in ("0", "1"):
                raise ParseError("const takes 0 or 1", lineno, cols[1], source)
            defs[label] = ("const", int(args[0]))
            children[label] = ()
        elif kind == "not":
            if len(args) != 1:
                raise ParseError(f"not takes exactly one child, got {len(args)}",
                                 lineno, cols[1], source)
            c = gate_ref(args[0], lineno, cols[2])
            defs[label] = ("not", c)
            children[label] = (c,)
        elif kind in ("and", "or"):
            if not args:
                raise ParseError(f"{kind} needs at least one child", lineno, cols[1], source)
            cs = tuple(gate_ref(a, lineno, cols[2 + j]) for j, a in enumerate(args))
            if len(set(cs)) != len(cs):
                raise ParseError(f"{kind} lists a child twice", lineno, cols[1], source)
            defs[label] = (kind, cs)
            children[label] = cs
        else:
            raise ParseError(f"unknown gate kind {kind!r}", lineno, cols[1], source)

    if output is None:
        raise ParseError("missing 'out' statement", source=source)
    if output not in defs:
        raise ParseError(f"output gate g{output} is undefined", source=source)
    if declared is not None and declared != len(names_seen):
        raise ParseError(
            f"header declares {declared} variables but {len(names_seen)} input gates found",
            source=source)
    for label, cs in children.items():
        for c in cs:
            if c not in defs:
                raise ParseError(f"g{label} references undefined gate g{c}", *where[label])
    order = _topo_order(sorted(defs), children, where)
    index = {label: i for i, label in enumerate(order)}
    gates, names = [], {}
    for label in order:
        kind, arg = defs[label]
        if kind == "input":
            vid = pool.add(arg)
            names[vid] = arg
            gates.append(("input", vid))
        elif kind == "const":
            gates.append(("const", arg))
        elif kind == "not":
            gates.append(("not", index[arg]))
        else:
            gates.append((kind, tuple(index[c] for c in arg)))
    return Circuit(gates, index[output], names)


def parse_dimacs(text: str, pool=None, source=None) -> Circuit:
    """Read a DIMACS CNF as one ``or`` gate per clause under a single ``and``.

    Variables are named ``x<k>`` for DIMACS variable ``k``; only variables
    occurring in some clause get input gates.
    """
    builder = CircuitBuilder(pool)
    header = None
    clauses, current = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("expected 'p cnf <vars> <clauses>'", lineno, 1, source)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError("non-integer in p line", lineno, 1, source) from None
            continue
        if header is None:
            raise ParseError("clause before 'p cnf' header", lineno, 1, source)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno, None, source) from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if abs(lit) > header[0]:
                    raise ParseError(f"literal {lit} exceeds declared variable count",
                                     lineno, None, source)
                current.append(lit)
    if current:
        clauses.append(current)
    if header is None:
        raise ParseError("missing 'p cnf' header", source=source)
    if len(clauses) != header[1]:
        raise ParseError(f"header declares {header[1]} clauses, found {len(clauses)}",
                         source=source)
    inputs = {}
    for cl in clauses:
        for lit in cl:
            if abs(lit) not in inputs:
                inputs[abs(lit)] = None
    for k in sorted(inputs):
        inputs[k] = builder.input(f"x{k}")
    ors = []
    for cl in clauses:
        lits = []
        for lit in dict.fromkeys(cl):
            g = inputs[abs(lit)]
            lits.append(g if lit > 0 else builder.not_(g))
        if not lits:
            ors.append(builder.const(0))
        else:
            ors.append(builder._add("or", tuple(lits)))
    if not ors:
        out = builder.const(1)
    else:
        out = builder._add("and", tuple(dict.fromkeys(ors)))
    return builder.build(out)


def to_function(c: Circuit, vars_=None):
    return c.to_function(vars_)


def underlying_graph(c: Circuit) -> UndirectedGraph:
    return c.underlying_graph()


def subcircuit_vars(c: Circuit, g: int) -> tuple:
    return c.subcircuit_vars(g)
