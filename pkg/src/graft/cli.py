"""Command-line entry point.

Exit codes: 0 success, 1 negative verdict, 2 usage or input error, 3 capacity exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import logic as L
from . import structures as st
from .sexpr import SexprError
from .structures import CapacityError, SortError

OK, NEGATIVE, USAGE, CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


# ---------------------------------------------------------------- io helpers

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None


def _json_file(path: str):
    text = _read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _structure(path: str):
    d = _json_file(path)
    try:
        return st.from_json(d)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{path}: not a structure: {e}") from None


def _scheme(path: str):
    from .qfd import scheme_from_json
    return scheme_from_json(_json_file(path))


def _term_text(args) -> str:
    if getattr(args, "file", None):
        return _read(args.file)
    if getattr(args, "term", None):
        return args.term
    raise UsageError("give a term with -f FILE or as an argument")


class Out:
    def __init__(self, fmt: str):
        self.fmt = fmt

    def emit(self, obj, text: str | None = None):
        if self.fmt == "text" and text is not None:
            print(text)
        else:
            print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------- commands

def _value_json(v):
    from .terms import OrderedGraph
    if isinstance(v, OrderedGraph):
        return {"ordered": {"n": v.n, "edges": sorted(map(list, v.edges))}}
    if isinstance(v, st.Structure):
        v = v.canonical_structure()
    return st.to_json(v)


def cmd_eval(args, out):
    from .terms import eval_term, parse_term, print_term
    t = parse_term(_term_text(args))
    holes = {}
    for h in args.hole or []:
        name, eq, path = h.partition("=")
        if not eq:
            raise UsageError(f"--hole expects NAME=FILE, got {h}")
        holes[name] = _structure(path)
    v = eval_term(t, args.sig, holes)
    val = _value_json(v)
    out.emit({"term": print_term(t), "value": val}, json.dumps(val, sort_keys=True))
    return OK


def cmd_scheme(args, out):
    from . import qfd
    if args.action == "validate":
        sch = qfd.scheme_from_json(_json_file(args.files[0]), check=False)
        bad = qfd.validate_scheme(sch)
        out.emit({"valid": bad is None, "violation": bad.to_json() if bad else None},
                 "valid" if bad is None else f"invalid: {bad.condition}: {bad.detail}")
        return OK if bad is None else NEGATIVE
    if args.action == "apply":
        if not args.structure:
            raise UsageError("apply needs -s STRUCTURE")
        sch = _scheme(args.files[0])
        s = _structure(args.structure)
        r = qfd.apply_scheme(sch, s)
        out.emit(st.to_json(r.canonical_structure()))
        return OK
    if args.action == "compose":
        if len(args.files) != 2:
            raise UsageError("compose takes two scheme files: outer then inner")
        g = qfd.compose_schemes(_scheme(args.files[0]), _scheme(args.files[1]))
        out.emit(g.to_json())
        return OK
    if args.action == "sep-check":
        sch = _scheme(args.files[0])
        ce = qfd.separation_counterexample(sch)
        syn = qfd.separation_condition_holds(sch)
        out.emit({"preserves_separation": ce is None, "syntactic_condition": syn,
                  "counterexample": st.to_json(ce) if ce is not None else None},
                 "preserves" if ce is None else "does not preserve source separation")
        return OK if ce is None else NEGATIVE
    if args.action == "split-union":
        sch = _scheme(args.files[0])
        if not (args.left and args.right):
            raise UsageError("split-union needs --left and --right type files")
        z1, z2 = _structure(args.left), _structure(args.right)
        sp = qfd.split_over_union(sch, z1.sort, z2.sort, z1, z2)
        out.emit({"left": sp.g1.to_json(), "right": sp.g2.to_json(),
                  "operations": [[op[0]] + [list(map(list, x)) if isinstance(x, tuple) else x for x in op[1:]]
                                 for op in sp.f_seq]})
        return OK
    raise UsageError(f"unknown scheme action {args.action}")


def cmd_theory(args, out):
    d = args.depth
    if args.action == "compute":
        t = L.fo_theory(_structure(args.files[0]), d)
        out.emit({"depth": d, "type": t.text()}, t.text())
        return OK
    if args.action == "oplus":
        s1, s2 = _structure(args.files[0]), _structure(args.files[1])
        composed = L.theory_oplus(L.fo_theory(s1, d), L.fo_theory(s2, d))
        direct = L.fo_theory(st.oplus(s1, s2), d)
        out.emit({"depth": d, "type": composed.text(), "agrees_with_direct": composed == direct})
        return OK if composed == direct else NEGATIVE
    if args.action == "qfd":
        from .qfd import apply_scheme
        sch, s = _scheme(args.files[0]), _structure(args.files[1])
        composed = L.theory_qfd(sch, L.fo_theory(s, d), d)
        direct = L.fo_theory(apply_scheme(sch, s), d)
        out.emit({"depth": d, "type": composed.text(), "agrees_with_direct": composed == direct})
        return OK if composed == direct else NEGATIVE
    raise UsageError(f"unknown theory action {args.action}")


def cmd_normalize(args, out):
    f = L.parse_formula(args.formula)
    if args.kind == "bool":
        g = L.normalize_bool(f)
    elif args.kind == "qf":
        g = L.normalize_qf(f)
    else:
        g = L.normalize_fo(f, args.depth if args.depth is not None else L.qdepth(f))
    text = L.to_sexpr(g)
    out.emit({"input": L.to_sexpr(f), "normal_form": text}, text)
    return OK


def _builtin_automaton(name: str):
    from . import recognizers as R
    from .modular import ARC2, EDGELESS2, SYM2
    if name == "simplicity":
        return R.simplicity_automaton()
    if name == "prime":
        return R.prime_automaton([EDGELESS2, SYM2, ARC2])
    raise UsageError(f"unknown builtin automaton {name}")


def _automaton(ref: str):
    from .recognizers import automaton_from_json
    if ref.startswith("builtin:"):
        return _builtin_automaton(ref.split(":", 1)[1])
    return automaton_from_json(_json_file(ref))


def _symbols(*automata):
    """Root symbols seen so far, as terms with placeholder children."""
    from .terms import parse_term
    keys = set()
    for a in automata:
        keys |= {op for op, _ in a.table}
    return [parse_term(k) for k in sorted(keys)]


def _seed(automata, texts):
    from .terms import parse_term
    for text in texts or []:
        t = parse_term(text)
        for a in automata:
            a.run(t)


def cmd_automaton(args, out):
    from . import recognizers as R
    from .terms import parse_term, print_term
    if args.action == "compile-fo":
        if not args.sentence:
            raise UsageError("compile-fo needs --sentence")
        f = L.parse_formula(args.sentence)
        a = R.compile_fo_recognizer(f, args.depth if args.depth is not None else L.qdepth(f), args.sig or "S")
        verdicts = {}
        for text in args.term or []:
            t = parse_term(text)
            verdicts[print_term(t)] = a.accepts(t)
        out.emit({"verdicts": verdicts, "automaton": a.to_json()})
        return OK if all(verdicts.values()) else NEGATIVE
    if not args.automata:
        raise UsageError(f"{args.action} needs an automaton file or builtin:NAME")
    if args.action == "run":
        a = _automaton(args.automata[0])
        results = {}
        for text in args.term or []:
            t = parse_term(text)
            results[print_term(t)] = a.accepts(t)
        out.emit({"accepts": results}, "\n".join(f"{'accept' if v else 'reject'} {k}" for k, v in results.items()))
        return OK if all(results.values()) else NEGATIVE
    if args.action == "product":
        if len(args.automata) != 2:
            raise UsageError("product takes two automata")
        a, b = (_automaton(x) for x in args.automata)
        _seed([a, b], args.term)
        p = R.product(a, b, args.mode)
        p.explore(_symbols(a, b), args.max_states)
        out.emit(p.to_json())
        return OK
    if args.action == "complement":
        a = _automaton(args.automata[0])
        _seed([a], args.term)
        c = R.complement(a)
        c.explore(_symbols(a), args.max_states)
        out.emit(c.to_json())
        return OK
    if args.action == "preimage":
        if not args.context:
            raise UsageError("preimage needs --context")
        a = _automaton(args.automata[0])
        _seed([a], args.term)
        p = R.preimage(a, parse_term(args.context))
        p.explore(_symbols(a), args.max_states)
        out.emit(p.to_json())
        return OK
    raise UsageError(f"unknown automaton action {args.action}")


def cmd_expansions(args, out):
    from .expansions import enumerate_expansions
    g = _structure(args.file)
    exps, forbidden = enumerate_expansions(g, args.m)
    items = sorted(st.dumps(e.graph.canonical_structure()) for e in exps)
    out.emit({"m": args.m, "contains_forbidden_bicomplete": forbidden, "count": len(items),
              "expansions": [json.loads(x) for x in items]})
    return OK


def cmd_sim(args, out):
    from .expansions import decide_sim
    from .recognizers import zeta_evaluator
    if len(args.files) != 2:
        raise UsageError("sim takes two graph files")
    if args.evaluator != "zeta":
        raise UsageError(f"unknown evaluator {args.evaluator}")
    g1, g2 = (_structure(p) for p in args.files)
    r = decide_sim(g1, g2, args.m, zeta_evaluator(), args.depth)
    out.emit({"equivalent": r}, "equivalent" if r else "not equivalent")
    return OK if r else NEGATIVE


def cmd_moddecomp(args, out):
    from .modular import modular_decomposition
    tree = modular_decomposition(_structure(args.file))
    out.emit(tree.to_json())
    return OK


def cmd_prime(args, out):
    from .modular import is_prime
    r = is_prime(_structure(args.file))
    out.emit({"prime": r}, "prime" if r else "not prime")
    return OK if r else NEGATIVE


def cmd_cwd(args, out):
    from .terms import cwd_search, print_term
    g = _structure(args.file)
    res = cwd_search(g, args.max_k, args.cap)
    if res is None:
        out.emit({"cwd": None, "max_k": args.max_k}, f"clique-width exceeds {args.max_k}")
        return NEGATIVE
    out.emit({"cwd": res[0], "witness": print_term(res[1])}, str(res[0]))
    return OK


def cmd_econ(args, out):
    from .terms import econ_search, print_term
    found = econ_search(args.max_n)
    rows = sorted((st.dumps(g.canonical_structure()), print_term(t)) for g, t in found.items())
    out.emit({"count": len(rows), "graphs": [{"graph": json.loads(g), "term": t} for g, t in rows]})
    return OK


def cmd_check(args, out):
    from . import recognizers as R
    if args.action == "congruence":
        from .modular import ARC2, EDGELESS2, SYM2
        evs = {"zeta": R.zeta_evaluator, "simplicity": R.simplicity_evaluator, "parity": R.parity_evaluator,
               "eta-only": R.eta_only_evaluator,
               "prime": lambda: R.prime_evaluator([EDGELESS2, SYM2, ARC2])}
        if args.evaluator not in evs:
            raise UsageError(f"unknown evaluator {args.evaluator}")
        rep = R.check_congruence(evs[args.evaluator](), args.sig, args.max_size, seed=args.seed)
        out.emit({"congruence": rep.ok, "checks": rep.checks, "witness": rep.witness},
                 "congruence" if rep.ok else "not a congruence")
        return OK if rep.ok else NEGATIVE
    if args.action == "oracle":
        ok, detail = _oracle(args.name, args.samples, args.seed, args.max_size)
        out.emit({"oracle": args.name, "ok": ok, "detail": detail})
        return OK if ok else NEGATIVE
    raise UsageError(f"unknown check action {args.action}")


def _oracle(name: str, samples: int, seed: int, max_size: int):
    """Seeded dual-route checks."""
    rng = random.Random(seed)
    if name == "simplicity":
        from .recognizers import simplicity_automaton
        from .terms import eval_term, print_term, random_hrm_term
        a = simplicity_automaton()
        for _ in range(samples):
            t = random_hrm_term(rng, rng.randint(1, 12))
            if a.accepts(t) == st.has_multiedges(eval_term(t, "HRM")):
                return False, print_term(t)
        return True, samples
    if name == "compose":
        from .qfd import apply_scheme, compose_schemes, random_scheme
        sort = st.Sort.of({"r": 2}, ["a"])
        structs = list(st.enumerate_structures(sort, max_size))
        for _ in range(samples):
            g1 = random_scheme(rng, sort, sort)
            g2 = random_scheme(rng, sort, sort)
            g = compose_schemes(g2, g1)
            for s in structs:
                if apply_scheme(g, s) != apply_scheme(g2, apply_scheme(g1, s)):
                    return False, st.to_json(s)
        return True, samples
    if name == "modular":
        from .modular import evaluate_tree, modular_decomposition, random_graph
        for _ in range(samples):
            g = random_graph(rng, rng.randint(1, max(1, max_size)), rng.random())
            if evaluate_tree(modular_decomposition(g)) != g:
                return False, st.to_json(g)
        return True, samples
    raise UsageError(f"unknown oracle {name}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graft", description="Graph algebras, definable operations, theories and recognizers.")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--cap", type=int, default=None, help="capacity guard (default: GRAFT_CAP or 20)")
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=["json", "text"], default=argparse.SUPPRESS)
        sp.add_argument("--cap", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        return sp

    e = common(sub.add_parser("eval", help="evaluate a term"))
    e.add_argument("term", nargs="?")
    e.add_argument("-f", "--file")
    e.add_argument("--sig", default=None)
    e.add_argument("--hole", action="append", help="NAME=structure.json")
    e.set_defaults(fn=cmd_eval)

    s = common(sub.add_parser("scheme", help="quantifier-free definable schemes"))
    s.add_argument("action", choices=["validate", "apply", "compose", "sep-check", "split-union"])
    s.add_argument("files", nargs="+")
    s.add_argument("-s", "--structure")
    s.add_argument("--left")
    s.add_argument("--right")
    s.set_defaults(fn=cmd_scheme)

    t = common(sub.add_parser("theory", help="bounded-depth first-order theories"))
    t.add_argument("action", choices=["compute", "oplus", "qfd"])
    t.add_argument("files", nargs="+")
    t.add_argument("--depth", type=int, default=1)
    t.set_defaults(fn=cmd_theory)

    n = common(sub.add_parser("normalize", help="normal forms of formulas"))
    n.add_argument("kind", choices=["bool", "qf", "fo"])
    n.add_argument("formula")
    n.add_argument("--depth", type=int, default=None)
    n.set_defaults(fn=cmd_normalize)

    a = common(sub.add_parser("automaton", help="tree automata"))
    a.add_argument("action", choices=["run", "product", "complement", "preimage", "compile-fo"])
    a.add_argument("automata", nargs="*", help="automaton JSON files or builtin:NAME")
    a.add_argument("-t", "--term", action="append")
    a.add_argument("--mode", choices=["and", "or", "minus"], default="and")
    a.add_argument("--context")
    a.add_argument("--sentence")
    a.add_argument("--depth", type=int, default=None)
    a.add_argument("--sig", default=None)
    a.add_argument("--max-states", type=int, default=2000)
    a.set_defaults(fn=cmd_automaton)

    x = common(sub.add_parser("expansions", help="expansions of a port graph"))
    x.add_argument("-f", "--file", required=True)
    x.add_argument("--m", type=int, default=1)
    x.set_defaults(fn=cmd_expansions)

    sm = common(sub.add_parser("sim", help="decide the expansion equivalence"))
    sm.add_argument("-f", "--files", nargs=2, required=True)
    sm.add_argument("--m", type=int, default=1)
    sm.add_argument("--depth", type=int, default=None)
    sm.add_argument("--evaluator", default="zeta")
    sm.set_defaults(fn=cmd_sim)

    md = common(sub.add_parser("moddecomp", help="modular decomposition"))
    md.add_argument("-f", "--file", required=True)
    md.set_defaults(fn=cmd_moddecomp)

    pr = common(sub.add_parser("prime", help="primality test"))
    pr.add_argument("-f", "--file", required=True)
    pr.set_defaults(fn=cmd_prime)

    cw = common(sub.add_parser("cwd", help="exact clique-width"))
    cw.add_argument("-f", "--file", required=True)
    cw.add_argument("--max-k", type=int, default=4)
    cw.set_defaults(fn=cmd_cwd)

    ec = common(sub.add_parser("econ-search", help="graphs reached by the economical signature"))
    ec.add_argument("--max-n", type=int, default=4)
    ec.set_defaults(fn=cmd_econ)

    ch = common(sub.add_parser("check", help="property harnesses"))
    ch.add_argument("action", choices=["congruence", "oracle"])
    ch.add_argument("--evaluator", default="zeta")
    ch.add_argument("--name", default="simplicity")
    ch.add_argument("--sig", default=None)
    ch.add_argument("--max-size", type=int, default=3)
    ch.add_argument("--samples", type=int, default=100)
    ch.set_defaults(fn=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return USAGE
    if args.cap is not None:
        os.environ["GRAFT_CAP"] = str(args.cap)
    out = Out(args.format)
    from .terms import TermError
    from .qfd import SchemeError
    try:
        return args.fn(args, out)
    except CapacityError as e:
        print(f"graft: capacity exceeded: {e}", file=sys.stderr)
        return CAPACITY
    except (UsageError, SexprError, TermError, SchemeError, SortError, L.FormulaError, ValueError) as e:
        print(f"graft: error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
