"""Truth-table Boolean functions with canonical (interned) identity.

A function is a pair ``(vars, table)``: ``vars`` is a strictly increasing
tuple of integer variable ids and ``table`` a flat boolean array of length
``2**len(vars)``.  The variable with the ``i``-th smallest id contributes
bit ``i`` of the table index (least significant first), so the index of an
assignment ``a`` is ``sum(a[v] << i for i, v in enumerate(vars))``.  Every
module in the package relies on this convention.

Functions are interned in a :class:`FunctionStore`; two live handles from
the same store are equal iff they are the same object, and ``f.id`` is the
store's canonical integer handle.
"""

import itertools
import threading
import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, check_cap


class VarPool:
    """Dense allocation of integer variable ids for string names."""

    def __init__(self, names=()):
        self._ids = {}
        self._names = []
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        if name in self._ids:
            return self._ids[name]
        vid = len(self._names)
        self._ids[name] = vid
        self._names.append(name)
        return vid

    def id(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise DomainError(f"unknown variable {name!r}") from None

    def name(self, vid: int) -> str:
        return self._names[vid]

    def names(self) -> dict:
        return dict(enumerate(self._names))

    def __contains__(self, name):
        return name in self._ids

    def __len__(self):
        return len(self._names)


def varset(items) -> tuple:
    """Sorted tuple of distinct variable ids; duplicates are rejected."""
    out = tuple(sorted(items))
    for a, b in zip(out, out[1:]):
        if a == b:
            raise DomainError(f"duplicate variable {a} in variable set")
    return out


def _column(n: int, pos: int) -> np.ndarray:
    """Truth table (over ``n`` variables) of the variable at position ``pos``."""
    block = np.repeat(np.array([False, True]), 1 << pos)
    return np.tile(block, 1 << (n - pos - 1))


def _tensor(table: np.ndarray, n: int) -> np.ndarray:
    # axis a of the tensor is the variable at position n - 1 - a
    return table.reshape((2,) * n) if n else table.reshape(())


def assignment_index(vars_, assignment) -> int:
    idx = 0
    for i, v in enumerate(vars_):
        try:
            bit = assignment[v]
        except KeyError:
            raise DomainError(f"assignment does not cover variable {v}") from None
        if bit not in (0, 1, True, False):
            raise DomainError(f"variable {v} assigned non-Boolean value {bit!r}")
        if bit:
            idx |= 1 << i
    return idx


def index_assignment(vars_, idx: int) -> dict:
    return {v: (idx >> i) & 1 for i, v in enumerate(vars_)}


def merge_assignments(*parts) -> dict:
    """Union of assignments with pairwise disjoint domains."""
    out = {}
    for part in parts:
        for v, b in part.items():
            if v in out:
                raise DomainError(f"assignments overlap on variable {v}")
            out[v] = b
    return out


class BoolFunc:
    """An interned Boolean function; obtain instances via the module helpers."""

    __slots__ = ("vars", "table", "id", "_key", "__weakref__")

    def __init__(self, vars_, table, fid, key):
        self.vars = vars_
        self.table = table
        self.id = fid
        self._key = key

    @property
    def n(self) -> int:
        return len(self.vars)

    def __repr__(self):
        if self.n <= 4:
            bits = "".join("1" if b else "0" for b in self.table)
            return f"BoolFunc(vars={self.vars}, table={bits})"
        return f"BoolFunc(vars={self.vars}, models={self.model_count()})"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, BoolFunc):
            return NotImplemented
        return self.vars == other.vars and self._key == other._key

    def __hash__(self):
        return hash((self.vars, self._key))

    def __call__(self, assignment) -> int:
        return self.eval(assignment)

    def eval(self, assignment) -> int:
        return int(self.table[assignment_index(self.vars, assignment)])

    def tensor(self) -> np.ndarray:
        return _tensor(self.table, self.n)

    def model_count(self) -> int:
        return int(np.count_nonzero(self.table))

    def models(self):
        """Yield the models as ``{var: bit}`` dicts in table order."""
        for idx in np.flatnonzero(self.table):
            yield index_assignment(self.vars, int(idx))

    def is_false(self) -> bool:
        return not self.table.any()

    def is_true(self) -> bool:
        return bool(self.table.all())

    def depends_on(self, v: int) -> bool:
        if v not in self.vars:
            return False
        pos = self.vars.index(v)
        t = self.tensor()
        axis = self.n - 1 - pos
        return not np.array_equal(np.take(t, 0, axis=axis), np.take(t, 1, axis=axis))

    def support(self) -> tuple:
        return tuple(v for v in self.vars if self.depends_on(v))

    def extend(self, vars_) -> "BoolFunc":
        """The same function viewed over the superset ``vars_``."""
        vars_ = varset(vars_)
        return STORE.intern(vars_, _extend_table(self, vars_))

    def __and__(self, other):
        return _binary(self, other, np.logical_and)

    def __or__(self, other):
        return _binary(self, other, np.logical_or)

    def __xor__(self, other):
        return _binary(self, other, np.logical_xor)

    def __invert__(self):
        return STORE.intern(self.vars, ~self.table)


def _extend_table(f: BoolFunc, vars_: tuple) -> np.ndarray:
    if vars_ == f.vars:
        return f.table
    missing = set(f.vars) - set(vars_)
    if missing:
        raise DomainError(f"cannot extend to a set missing {sorted(missing)}")
    inner = set(f.vars)
    shape = [2 if v in inner else 1 for v in reversed(vars_)]
    t = f.table.reshape(shape)
    t = np.broadcast_to(t, (2,) * len(vars_))
    return np.ascontiguousarray(t).reshape(-1)


def _binary(f, g, op):
    if not isinstance(g, BoolFunc):
        return NotImplemented
    vars_ = tuple(sorted(set(f.vars) | set(g.vars)))
    check_cap(len(vars_))
    return STORE.intern(vars_, op(_extend_table(f, vars_), _extend_table(g, vars_)))


class FunctionStore:
    """Thread-safe interning table ``(vars, table) -> BoolFunc``.

    Entries are held weakly: a function that is no longer referenced
    anywhere is dropped, and re-creating it yields a fresh id.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._table = weakref.WeakValueDictionary()
        self._by_id = weakref.WeakValueDictionary()
        self._next = itertools.count()

    def intern(self, vars_, table) -> BoolFunc:
        table = np.asarray(table, dtype=bool).reshape(-1)
        if table.size != 1 << len(vars_):
            raise DomainError(
                f"table length {table.size} does not match {len(vars_)} variables")
        key = np.packbits(table).tobytes() + table.size.to_bytes(8, "little")
        with self._lock:
            f = self._table.get((vars_, key))
            if f is None:
                table = table.copy()
                table.flags.writeable = False
                f = BoolFunc(vars_, table, next(self._next), key)
                self._table[(vars_, key)] = f
                self._by_id[f.id] = f
            return f

    def lookup(self, fid: int):
        return self._by_id.get(fid)

    def __len__(self):
        return len(self._table)


STORE = FunctionStore()


def from_table(vars_, table) -> BoolFunc:
    vars_ = varset(vars_)
    check_cap(len(vars_))
    return STORE.intern(vars_, table)


def const(value, vars_=()) -> BoolFunc:
    vars_ = varset(vars_)
    check_cap(len(vars_))
    return STORE.intern(vars_, np.full(1 << len(vars_), bool(value)))


def literal(v: int, positive: bool = True, vars_=None) -> BoolFunc:
    vars_ = varset(vars_ if vars_ is not None else (v,))
    if v not in vars_:
        raise DomainError(f"variable {v} not in {vars_}")
    check_cap(len(vars_))
    col = _column(len(vars_), vars_.index(v))
    return STORE.intern(vars_, col if positive else ~col)


def tabulate(vars_, fn) -> BoolFunc:
    """Build a function from a vectorised predicate.

    ``fn`` receives a dict mapping each variable to its boolean column
    (length ``2**n``) and must return a boolean array of the same length.
    """
    vars_ = varset(vars_)
    n = len(vars_)
    check_cap(n)
    cols = {v: _column(n, i) for i, v in enumerate(vars_)}
    out = np.asarray(fn(cols), dtype=bool)
    if out.ndim == 0:
        out = np.full(1 << n, bool(out))
    return STORE.intern(vars_, out)


def from_models(vars_, models) -> BoolFunc:
    vars_ = varset(vars_)
    check_cap(len(vars_))
    table = np.zeros(1 << len(vars_), dtype=bool)
    for m in models:
        table[assignment_index(vars_, m)] = True
    return STORE.intern(vars_, table)


def cofactor(f: BoolFunc, b) -> BoolFunc:
    """Fix the variables of ``b`` (a ``{var: bit}`` mapping) in ``f``."""
    extra = set(b) - set(f.vars)
    if extra:
        raise DomainError(f"cofactor assigns variables {sorted(extra)} outside the function")
    if not b:
        return f
    n = f.n
    index = []
    for axis in range(n):
        v = f.vars[n - 1 - axis]
        index.append(int(bool(b[v])) if v in b else slice(None))
    rest = tuple(v for v in f.vars if v not in b)
    sub = f.tensor()[tuple(index)]
    return STORE.intern(rest, np.ascontiguousarray(sub).reshape(-1))


def equivalent(f: BoolFunc, g: BoolFunc) -> bool:
    if f.vars != g.vars:
        raise DomainError(f"variable sets differ: {f.vars} vs {g.vars}")
    return f is g or np.array_equal(f.table, g.table)


def model_count(f: BoolFunc) -> int:
    return f.model_count()


def models(f: BoolFunc):
    return f.models()


@dataclass
class Factorization:
    """Partition of the ``block`` assignments by the cofactor they induce.

    ``labels[i]`` is the factor index of the block assignment with table
    index ``i``; factors are numbered by their least model, which is also
    recorded in ``witnesses``.
    """

    func: BoolFunc
    block: tuple
    rest: tuple
    labels: np.ndarray
    witnesses: list
    _rows: np.ndarray = field(repr=False)
    _factors: list = field(default=None, repr=False)
    _cofactors: list = field(default=None, repr=False)

    def __len__(self):
        return len(self.witnesses)

    @property
    def factors(self) -> list:
        if self._factors is None:
            self._factors = [STORE.intern(self.block, self.labels == g)
                             for g in range(len(self.witnesses))]
        return self._factors

    @property
    def cofactors(self) -> list:
        if self._cofactors is None:
            self._cofactors = [STORE.intern(self.rest, self._rows[w])
                               for w in self.witnesses]
        return self._cofactors

    def factor_of(self, assignment) -> int:
        return int(self.labels[assignment_index(self.block, assignment)])


def factorize(f: BoolFunc, y) -> Factorization:
    """Group the assignments of ``y & f.vars`` by the cofactor they induce."""
    block = tuple(v for v in f.vars if v in set(y))
    check_cap(len(block), "factor block")
    rest = tuple(v for v in f.vars if v not in set(block))
    n = f.n
    pos = {v: i for i, v in enumerate(f.vars)}
    block_axes = sorted(n - 1 - pos[v] for v in block)
    rest_axes = sorted(n - 1 - pos[v] for v in rest)
    rows = f.tensor().transpose(block_axes + rest_axes).reshape(
        1 << len(block), 1 << len(rest))
    packed = np.ascontiguousarray(np.packbits(rows, axis=1))
    # one opaque bytes value per row keeps np.unique one-dimensional
    keys = packed.view(np.dtype((np.void, packed.shape[1]))).reshape(-1)
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    labels = rank[inverse]
    witnesses = [int(i) for i in first[order]]
    return Factorization(f, block, rest, labels, witnesses, rows)


def factors(f: BoolFunc, y) -> list:
    """Characteristic functions of the factors of ``f`` relative to ``y``."""
    return factorize(f, y).factors


def factor_count(f: BoolFunc, y) -> int:
    return len(factorize(f, y))
