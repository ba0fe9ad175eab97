"""Command-line front end: ``python -m twsdd <command> ...``.

Each command prints a JSON report (``"schema": 1``) on stdout and a short
human-readable summary on stderr.  Exit codes: 0 success, 1 bad input
(parse or domain error), 2 capacity exceeded, 3 a verified property
failed.
"""

import argparse
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis
from .boolfunc import VarPool
from .circuit import parse_circuit, parse_dimacs
from .compile import (compile_dsnnf, compile_sdd, dsnnf_size_bound, factor_width, fiw,
                      sdd_size_bound, sdw)
from .errors import CapacityError, DomainError, InvariantError, ParseError, TwsddError, set_cap
from .form import parse_form
from .isa import IsaParams, isa_function, isa_sdd, isa_size_audit
from .querylab import experiment_csv, hardness_experiment, lineage, parse_database, parse_query
from .vtree import (Vtree, balanced_vtree, derive_vtree, isa_vtree, linear_vtree, parse_vtree,
                    prune_to, random_vtree)

SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DomainError(message)


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as e:
        raise DomainError(f"cannot read {path}: {e.strerror}") from None


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def load_circuit(path, pool=None):
    text = _read(path)
    if str(path).endswith(".cnf") or text.lstrip().startswith(("p cnf", "c")):
        return parse_dimacs(text, pool, str(path))
    return parse_circuit(text, pool, str(path))


def make_vtree(source, circuit, seed=0, exact=False):
    """``(vtree over the circuit's variables, extra report fields)``."""
    vars_ = circuit.vars
    by_name = {name: v for v, name in circuit.names.items()}

    def lookup(names):
        out = []
        for n in names:
            if n not in by_name:
                raise DomainError(f"vtree names unknown variable {n!r}")
            out.append(by_name[n])
        return out

    if source == "derive":
        full, ntd = derive_vtree(circuit, exact=exact)
        extra = {"decomposition_width": ntd.width}
        if not vars_:
            return None, extra
        return prune_to(full, vars_), extra
    if not vars_:
        return None, {}
    if source == "balanced":
        return balanced_vtree(vars_), {}
    if source == "random":
        return random_vtree(vars_, random.Random(seed)), {}
    if source.startswith("linear:"):
        order = lookup([s for s in source[7:].split(",") if s])
        if sorted(order) != sorted(vars_):
            raise DomainError("linear order must list every variable exactly once")
        return linear_vtree(order), {}
    if source.startswith("isa:"):
        try:
            k, m = (int(t) for t in source[4:].split(","))
        except ValueError:
            raise DomainError("expected isa:<k>,<m>") from None
        tree, names = isa_vtree(k, m)
        remap = dict(zip(tree.vars, lookup([names[v] for v in tree.vars])))
        if sorted(remap.values()) != sorted(vars_):
            raise DomainError("isa vtree variables do not match the circuit")
        return _relabel(tree, remap), {}
    if source.startswith("file:"):
        path = source[5:]
        pool = VarPool()
        for v in vars_:
            pool.add(circuit.names[v])
        tree, pool = parse_vtree(_read(path), pool, path)
        tree = prune_to(tree, [v for v in tree.vars if v in set(vars_)])
        if tree.vars != tuple(sorted(vars_)):
            raise DomainError("vtree file does not cover the circuit's variables")
        return tree, {}
    raise DomainError(f"unknown vtree source {source!r}")


def _relabel(tree, remap):
    labels = [remap.get(x, x) if x is not None else None for x in tree.labels]
    return Vtree(tree.children, labels, tree.root)


def _emit(report, summary, path=None):
    report = {"schema": SCHEMA, **report}
    text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def _verify_or_fail(form, expected, distinct_subs=True):
    rep = analysis.verify(form, expected, distinct_subs=distinct_subs)
    if not rep.ok:
        raise InvariantError(rep.summary())
    return rep


def cmd_compile(args):
    t0 = time.perf_counter()
    circuit = load_circuit(args.input)
    f = circuit.to_function()
    tree, extra = make_vtree(args.vtree, circuit, args.seed, args.exact)
    kind = "sdd" if args.sdd else "dsnnf"
    n = len(f.vars)
    if tree is None:
        raise DomainError("the circuit has no variables; nothing to structure")
    comp = compile_sdd if kind == "sdd" else compile_dsnnf
    form = comp(f, tree, circuit.names)
    report = {"command": "compile", "kind": kind, "n": n, "size": form.size,
              "fw": factor_width(f, tree).value, **extra}
    if kind == "sdd":
        k = sdw(f, tree, form).value
        report.update(sdw=k, bound=sdd_size_bound(n, k))
    else:
        k = fiw(f, tree, form).value
        report.update(fiw=k, bound=dsnnf_size_bound(n, k))
    if form.size > report["bound"]:
        raise InvariantError(f"size {form.size} exceeds the bound {report['bound']}")
    if not args.no_verify:
        _verify_or_fail(form, f)
    report["verified"] = not args.no_verify
    if args.output:
        _write(args.output, form.to_text())
    if args.timing:
        report["wall_time"] = round(time.perf_counter() - t0, 6)
    _emit(report, f"{kind}: {n} vars, size {form.size} (bound {report['bound']})", args.report)
    return 0


def _load_form(path):
    return parse_form(_read(path), VarPool(), str(path))


def cmd_count(args):
    form = _load_form(args.form)
    by_name = {name: v for v, name in form.names.items()}
    if args.weights:
        raw = analysis.parse_weights(_read(args.weights), None, args.weights)
        weights = {}
        for name, p in raw.items():
            if name not in by_name:
                raise DomainError(f"weight given for unknown variable {name!r}")
            weights[by_name[name]] = p
        value = analysis.weighted_count(form, weights)
        report = {"command": "count", "probability": str(value)}
        summary = str(value)
    else:
        value = analysis.model_count(form)
        report = {"command": "count", "model_count": value, "n": len(form.vars)}
        summary = str(value)
    _emit(report, summary, args.report)
    return 0


def cmd_verify(args):
    form = _load_form(args.form)
    expected = None
    if args.against:
        pool = VarPool()
        for v in sorted(form.names):
            pool.add(form.names[v])
        circuit = load_circuit(args.against, pool)
        expected = circuit.to_function(form.vars)
    rep = analysis.verify(form, expected, distinct_subs=not args.no_distinct_subs)
    _emit({"command": "verify", "ok": rep.ok, "checks": rep.as_dict()}, rep.summary(),
          args.report)
    return 0 if rep.ok else 3


def cmd_rank(args):
    if args.fn:
        name, _, param = args.fn.partition(":")
        if name != "disjointness":
            raise DomainError(f"unknown function family {name!r}")
        try:
            n = int(param)
        except ValueError:
            raise DomainError("expected disjointness:<n>") from None
        f, X, Y = analysis.disjointness(n)
        rank = analysis.comm_rank(f, X, Y)
        report = {"command": "rank", "function": args.fn, "rows": 1 << n, "rank": rank}
    else:
        if not (args.input and args.left):
            raise DomainError("rank needs --fn or both --input and --left")
        circuit = load_circuit(args.input)
        f = circuit.to_function()
        by_name = {name: v for v, name in circuit.names.items()}
        left = []
        for s in args.left.split(","):
            if s not in by_name:
                raise DomainError(f"unknown variable {s!r}")
            left.append(by_name[s])
        right = [v for v in f.vars if v not in set(left)]
        rank = analysis.comm_rank(f, left, right)
        report = {"command": "rank", "left": sorted(args.left.split(",")), "rank": rank}
    _emit(report, str(rank), args.report)
    return 0


def _bench_one(job):
    k, n, compiler, auto, seed = job
    rng = random.Random(seed) if seed is not None else None
    return hardness_experiment(k, [n], compiler, auto_select=auto, rng=rng)


def _int_range(text):
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",")]


def cmd_bench_h(args):
    try:
        ns = _int_range(args.n)
    except ValueError:
        raise DomainError("expected --n like 2..4 or 2,3") from None
    seed = args.seed if args.random_vtree else None
    jobs = [(args.k, n, args.compiler, args.auto or args.random_vtree, seed) for n in ns]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    rows = [r for rs in results for r in rs]
    if args.csv:
        _write(args.csv, experiment_csv(rows))
    ok = all(r["ok"] for r in rows)
    _emit({"command": "bench-h", "k": args.k, "rows": rows, "ok": ok},
          f"{len(rows)} instances, {'all floors met' if ok else 'FLOOR VIOLATED'}", args.report)
    return 0 if ok else 3


def cmd_isa(args):
    p = IsaParams(args.k, args.m)
    form = isa_sdd(p)
    report = {"command": "isa", "k": p.k, "m": p.m, "n": p.n, "size": form.size}
    if not args.no_verify:
        _verify_or_fail(form, isa_function(p), distinct_subs=False)
        report["verified"] = True
    if args.audit:
        audit = isa_size_audit(form, p)
        report["audit"] = audit
        if not audit["ok"]:
            raise InvariantError(f"ISA audit failed: {audit['checks']}")
    if args.output:
        _write(args.output, form.to_text())
    _emit(report, f"ISA n={p.n}: size {form.size}" + (", audit pass" if args.audit else ""),
          args.report)
    return 0


def cmd_lineage(args):
    db = parse_database(_read(args.db), args.db)
    q = parse_query(_read(args.query) if Path(args.query).is_file() else args.query,
                    args.query)
    c = lineage(q, db)
    report = {"command": "lineage", "tuples": len(db.tuples), "gates": len(c.gates),
              "vars": [c.names[v] for v in c.vars]}
    if args.output:
        _write(args.output, c.to_text())
    if args.probability:
        missing = [db.pool.name(v) for v in c.vars if v not in db.prob]
        if missing:
            raise DomainError(f"tuples without probability: {', '.join(missing)}")
        if c.vars:
            f = c.to_function()
            form = compile_sdd(f, balanced_vtree(f.vars), c.names)
            prob = analysis.weighted_count(form, db.prob)
        else:
            prob = 1 if c.to_function().is_true() else 0
        report["probability"] = str(prob)
    _emit(report, f"lineage over {len(c.vars)} tuples, {len(c.gates)} gates"
          + (f", probability {report['probability']}" if args.probability else ""), args.report)
    return 0


def build_parser():
    p = _Parser(prog="twsdd", description=__doc__.splitlines()[0])
    p.add_argument("--cap", type=int, help="variable cap (default 24 or TWSDD_CAP)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a .bc/.cnf circuit")
    c.add_argument("input")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--sdd", action="store_true")
    g.add_argument("--dsnnf", action="store_true")
    c.add_argument("--vtree", default="derive",
                   help="derive | balanced | random | linear:a,b,.. | isa:k,m | file:PATH")
    c.add_argument("--exact", action="store_true", help="exact treewidth decomposition")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--no-verify", action="store_true")
    c.add_argument("--timing", action="store_true", help="add wall time to the report")
    c.add_argument("-o", "--output")
    c.add_argument("--report")
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("count", help="model count or probability of a compiled form")
    c.add_argument("form")
    c.add_argument("--weights")
    c.add_argument("--report")
    c.set_defaults(func=cmd_count)

    c = sub.add_parser("verify", help="check determinism, structure and decisions")
    c.add_argument("form")
    c.add_argument("--against", help="circuit the form must be equivalent to")
    c.add_argument("--no-distinct-subs", action="store_true")
    c.add_argument("--report")
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("rank", help="rational rank of a communication matrix")
    c.add_argument("--fn")
    c.add_argument("--input")
    c.add_argument("--left")
    c.add_argument("--report")
    c.set_defaults(func=cmd_rank)

    c = sub.add_parser("bench-h", help="size floors for the H family")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--n", default="2..4")
    c.add_argument("--compiler", choices=("sdd", "dsnnf"), default="sdd")
    c.add_argument("--auto", action="store_true", help="pick the cut by the balance argument")
    c.add_argument("--random-vtree", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--csv")
    c.add_argument("--report")
    c.set_defaults(func=cmd_bench_h)

    c = sub.add_parser("isa", help="explicit SDD for the indirect storage function")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--audit", action="store_true")
    c.add_argument("--no-verify", action="store_true")
    c.add_argument("-o", "--output")
    c.add_argument("--report")
    c.set_defaults(func=cmd_isa)

    c = sub.add_parser("lineage", help="lineage circuit of a query over a database")
    c.add_argument("--db", required=True)
    c.add_argument("--query", required=True, help="query text or a file holding it")
    c.add_argument("--probability", action="store_true")
    c.add_argument("-o", "--output")
    c.add_argument("--report")
    c.set_defaults(func=cmd_lineage)
    return p


def main(argv=None) -> int:
    args = None
    try:
        args = build_parser().parse_args(argv)
        if args.cap is not None:
            set_cap(args.cap)
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except CapacityError as e:
        print(f"capacity: {e}", file=sys.stderr)
        return 2
    except InvariantError as e:
        print(f"invariant failed: {e}", file=sys.stderr)
        return 3
    except (DomainError, TwsddError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    finally:
        if args is not None and args.cap is not None:
            set_cap(None)
