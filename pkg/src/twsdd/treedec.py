"""Tree decompositions: min-fill heuristic, exact oracle, nice form, PACE I/O."""

from .circuit import UndirectedGraph
from .errors import CapacityError, DomainError, ParseError

EXACT_LIMIT = 14


class TreeDecomposition:
    """Rooted tree with a bag (frozenset of graph vertices) per node."""

    def __init__(self, bags, children, root=0):
        self.bags = [frozenset(b) for b in bags]
        self.children = [list(c) for c in children]
        self.root = root
        self.parent = [-1] * len(self.bags)
        for p, cs in enumerate(self.children):
            for c in cs:
                self.parent[c] = p

    def __len__(self):
        return len(self.bags)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def preorder(self):
        out, stack = [], [self.root]
        while stack:
            t = stack.pop()
            out.append(t)
            stack.extend(reversed(self.children[t]))
        return out

    def postorder(self):
        return self.preorder()[::-1]

    def tree_problems(self):
        problems = []
        if not self.bags:
            return ["decomposition has no nodes"]
        if self.parent[self.root] != -1:
            problems.append("root has a parent")
        seen = set()
        for t in self.preorder():
            if t in seen:
                problems.append(f"node {t} reached twice")
                return problems
            seen.add(t)
        if len(seen) != len(self.bags):
            problems.append(f"{len(self.bags) - len(seen)} nodes unreachable from root")
        return problems

    def problems(self, graph: UndirectedGraph):
        """Violations of the three decomposition properties (empty if valid)."""
        problems = self.tree_problems()
        if problems:
            return problems
        where = {}
        for t, bag in enumerate(self.bags):
            for v in bag:
                if not 0 <= v < graph.n:
                    problems.append(f"bag {t} holds unknown vertex {v}")
                where.setdefault(v, set()).add(t)
        for v in range(graph.n):
            if v not in where:
                problems.append(f"vertex {v} in no bag")
        for u, v in graph.edges():
            if not any(u in self.bags[t] for t in where.get(v, ())):
                problems.append(f"edge ({u}, {v}) not covered")
        for v, nodes in where.items():
            tops = [t for t in nodes if self.parent[t] not in nodes]
            if len(tops) != 1:
                problems.append(f"occurrences of vertex {v} are not connected")
        return problems

    def is_valid(self, graph) -> bool:
        return not self.problems(graph)

    def __repr__(self):
        return f"TreeDecomposition(nodes={len(self.bags)}, width={self.width})"


def decomposition_from_order(graph: UndirectedGraph, order) -> TreeDecomposition:
    """Decomposition induced by eliminating vertices in ``order``."""
    if sorted(order) != list(range(graph.n)):
        raise DomainError("elimination order must be a permutation of the vertices")
    if graph.n == 0:
        return TreeDecomposition([()], [[]])
    adj = [set(a) - {v} for v, a in enumerate(graph.adj)]
    pos = {v: i for i, v in enumerate(order)}
    bags, parent = [], []
    for v in order:
        nb = adj[v]
        bags.append({v} | nb)
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        parent.append(min((pos[a] for a in nb), default=None))
    # components are chained so that the result is a single tree
    roots = [i for i, p in enumerate(parent) if p is None]
    for a, b in zip(roots, roots[1:]):
        parent[a] = b
    children = [[] for _ in bags]
    for i, p in enumerate(parent):
        if p is not None:
            children[p].append(i)
    return TreeDecomposition(bags, children, root=roots[-1])


def min_fill_order(graph: UndirectedGraph):
    """Min-fill elimination order; ties broken by degree, then vertex id."""
    adj = [set(a) - {v} for v, a in enumerate(graph.adj)]
    remaining = set(range(graph.n))
    order = []
    while remaining:
        best = None
        for v in sorted(remaining):
            nb = sorted(adj[v])
            fill = 0
            for i, a in enumerate(nb):
                for b in nb[i + 1:]:
                    if b not in adj[a]:
                        fill += 1
            key = (fill, len(nb), v)
            if best is None or key < best:
                best = key
        v = best[2]
        for a in adj[v]:
            adj[a] |= adj[v] - {a}
            adj[a].discard(v)
        remaining.discard(v)
        order.append(v)
    return order


def min_fill_decompose(graph: UndirectedGraph) -> TreeDecomposition:
    return decomposition_from_order(graph, min_fill_order(graph))


def _exact_table(graph, limit):
    n = graph.n
    if n > limit:
        raise CapacityError(f"exact treewidth limited to {limit} vertices, graph has {n}")
    nbr = [0] * n
    for u, v in graph.edges():
        if u != v:
            nbr[u] |= 1 << v
            nbr[v] |= 1 << u

    def q_size(s, v):
        # vertices outside s | {v} reachable from v through s
        seen = 1 << v
        frontier = 1 << v
        out = 0
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                u = low.bit_length() - 1
                f ^= low
                nxt |= nbr[u]
            nxt &= ~seen
            seen |= nxt
            out |= nxt & ~s
            frontier = nxt & s
        return bin(out).count("1")

    full = (1 << n) - 1
    tw = {0: -1}
    best = {}
    for s in range(1, full + 1):
        val, arg = None, None
        bits = s
        while bits:
            low = bits & -bits
            v = low.bit_length() - 1
            bits ^= low
            rest = s ^ low
            cost = max(tw[rest], q_size(rest, v))
            if val is None or cost < val:
                val, arg = cost, v
        tw[s] = val
        best[s] = arg
    return tw, best


def exact_treewidth(graph: UndirectedGraph, limit: int = EXACT_LIMIT) -> int:
    """Exact treewidth by dynamic programming over vertex subsets."""
    if graph.n == 0:
        return -1
    tw, _ = _exact_table(graph, limit)
    return max(tw[(1 << graph.n) - 1], 0)


def exact_decompose(graph: UndirectedGraph, limit: int = EXACT_LIMIT) -> TreeDecomposition:
    """A decomposition of minimum width (from an optimal elimination order)."""
    if graph.n == 0:
        return TreeDecomposition([()], [[]])
    _, best = _exact_table(graph, limit)
    s = (1 << graph.n) - 1
    rev = []
    while s:
        v = best[s]
        rev.append(v)
        s ^= 1 << v
    return decomposition_from_order(graph, rev[::-1])


class NiceTreeDecomposition(TreeDecomposition):
    """Nice decomposition: node kinds leaf/introduce/forget/join, empty root bag.

    ``vertex[t]`` is the introduced or forgotten vertex (``None`` otherwise)
    and ``forget_node[v]`` the unique node forgetting ``v``.
    """

    def __init__(self, bags, children, kinds, vertex, root):
        super().__init__(bags, children, root)
        self.kinds = list(kinds)
        self.vertex = list(vertex)
        self.forget_node = {}
        for t, kind in enumerate(self.kinds):
            if kind == "forget":
                if self.vertex[t] in self.forget_node:
                    raise DomainError(f"vertex {self.vertex[t]} forgotten twice")
                self.forget_node[self.vertex[t]] = t

    def nice_problems(self):
        problems = []
        if self.bags[self.root]:
            problems.append("root bag is not empty")
        for t, kind in enumerate(self.kinds):
            cs = self.children[t]
            bag = self.bags[t]
            if kind == "leaf":
                if cs:
                    problems.append(f"leaf {t} has children")
            elif kind == "join":
                if len(cs) != 2 or any(self.bags[c] != bag for c in cs):
                    problems.append(f"join {t} malformed")
            elif kind in ("introduce", "forget"):
                if len(cs) != 1:
                    problems.append(f"{kind} {t} must have one child")
                    continue
                child = self.bags[cs[0]]
                v = self.vertex[t]
                if kind == "introduce" and not (v not in child and bag == child | {v}):
                    problems.append(f"introduce {t} malformed")
                if kind == "forget" and not (v in child and bag == child - {v}):
                    problems.append(f"forget {t} malformed")
            else:
                problems.append(f"node {t} has unknown kind {kind!r}")
        return problems

    def problems(self, graph):
        return super().problems(graph) + self.nice_problems()


def make_nice(td: TreeDecomposition, graph=None) -> NiceTreeDecomposition:
    """Convert ``td`` to nice form of the same width with an empty root bag.

    On each tree edge the vertices leaving the bag are forgotten first
    (nearest the child) and the new ones introduced above; this keeps every
    intermediate bag inside one of the two original bags.  Nodes with more
    than one child become left-deep chains of binary joins.
    """
    problems = td.problems(graph) if graph is not None else td.tree_problems()
    if problems:
        raise DomainError("invalid tree decomposition: " + "; ".join(problems))
    bags, children, kinds, vertex = [], [], [], []

    def new(bag, kind, v, cs):
        bags.append(frozenset(bag))
        children.append(list(cs))
        kinds.append(kind)
        vertex.append(v)
        return len(bags) - 1

    def transition(node, src, dst):
        cur = set(src)
        for v in sorted(src - dst):
            cur.discard(v)
            node = new(cur, "forget", v, [node])
        for v in sorted(dst - src):
            cur.add(v)
            node = new(cur, "introduce", v, [node])
        return node

    built = {}
    for t in td.postorder():
        bag = td.bags[t]
        if not td.children[t]:
            built[t] = new(bag, "leaf", None, [])
            continue
        tops = [transition(built[c], td.bags[c], bag) for c in td.children[t]]
        node = tops[0]
        for other in tops[1:]:
            node = new(bag, "join", None, [node, other])
        built[t] = node
    root = transition(built[td.root], td.bags[td.root], frozenset())
    return NiceTreeDecomposition(bags, children, kinds, vertex, root)


def parse_pace_td(text: str, source=None) -> TreeDecomposition:
    """Read the PACE ``.td`` format (1-based bags and vertices); root is bag 1."""
    header = None
    bags = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split()
        if not toks or toks[0] == "c":
            continue
        try:
            if toks[0] == "s":
                if len(toks) != 5 or toks[1] != "td":
                    raise ParseError("expected 's td <bags> <width+1> <vertices>'",
                                     lineno, 1, source)
                header = tuple(int(t) for t in toks[2:])
            elif toks[0] == "b":
                i = int(toks[1])
                if i in bags:
                    raise ParseError(f"bag {i} defined twice", lineno, 1, source)
                bags[i] = [int(t) - 1 for t in toks[2:]]
            else:
                if len(toks) != 2:
                    raise ParseError("expected a tree edge 'i j'", lineno, 1, source)
                edges.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise ParseError("non-integer token", lineno, None, source) from None
    if header is None:
        raise ParseError("missing 's td' line", source=source)
    nb, w1, nv = header
    if sorted(bags) != list(range(1, nb + 1)):
        raise ParseError(f"expected bags 1..{nb}", source=source)
    if max((len(b) for b in bags.values()), default=0) > w1:
        raise ParseError("a bag exceeds the declared width", source=source)
    if any(not 0 <= v < nv for b in bags.values() for v in b):
        raise ParseError("bag vertex out of range", source=source)
    if len(edges) != nb - 1:
        raise ParseError(f"a tree on {nb} bags needs {nb - 1} edges", source=source)
    adj = {i: [] for i in bags}
    for a, b in edges:
        if a not in adj or b not in adj:
            raise ParseError(f"edge ({a}, {b}) names an unknown bag", source=source)
        adj[a].append(b)
        adj[b].append(a)
    children = [[] for _ in range(nb)]
    seen = {1}
    stack = [1]
    while stack:
        a = stack.pop()
        for b in sorted(adj[a]):
            if b not in seen:
                seen.add(b)
                children[a - 1].append(b - 1)
                stack.append(b)
    if len(seen) != nb:
        raise ParseError("tree edges do not connect all bags", source=source)
    return TreeDecomposition([bags[i] for i in range(1, nb + 1)], children, root=0)


def write_pace_td(td: TreeDecomposition, n_vertices: int) -> str:
    lines = [f"s td {len(td)} {td.width + 1} {n_vertices}"]
    for t, bag in enumerate(td.bags):
        lines.append(" ".join(["b", str(t + 1)] + [str(v + 1) for v in sorted(bag)]))
    for t, p in enumerate(td.parent):
        if p >= 0:
            lines.append(f"{p + 1} {t + 1}")
    return "\n".join(lines) + "\n"
