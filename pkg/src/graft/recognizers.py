"""Deterministic bottom-up tree automata over terms and label evaluators on
structures that are meant to factor through a congruence."""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Callable

from . import structures as st
from .structures import (CapacityError, MultiGraph, Sort, SortError, Structure, graph_sort,
                         make_graph)
from .terms import (SIGNATURES, SignatureDef, Term, TermError, derive_parallel, eval_term,
                    get_signature, print_term, quotient_graph, unary_scheme)


# ---------------------------------------------------------------- tree automata

def op_key(t: Term) -> str:
    """Descriptor of the symbol at the root of ``t`` (operation plus parameters)."""
    return print_term(Term(t.op, t.params, tuple(Term("hole", ("_",)) for _ in t.children)))


class TreeAutomaton:
    """``step(node, child_states)`` gives the state of a node; ``accept(state)``
    decides acceptance.  Transitions are memoized, so the automaton only ever
    materializes the states it reaches."""

    def __init__(self, sig: SignatureDef | str, step: Callable, accept: Callable, name: str = "automaton"):
        self.sig = get_signature(sig) if isinstance(sig, str) else sig
        self._step = step
        self._accept = accept
        self.name = name
        self.table = {}
        self.states = {}

    def _intern(self, q):
        if q not in self.states:
            self.states[q] = len(self.states)
        return q

    def step(self, t: Term, kids: tuple):
        key = (op_key(t), kids)
        if key not in self.table:
            self.table[key] = self._intern(self._step(t, kids))
        return self.table[key]

    def run(self, t: Term, holes=None):
        holes = holes or {}
        if t.op == "hole":
            if t.params[0] not in holes:
                raise TermError(f"hole {t.params[0]} has no state")
            return holes[t.params[0]]
        if self.sig is not None and not self.sig.admits(t.op):
            raise TermError(f"{t.op} is not in signature {self.sig.name}")
        kids = tuple(self.run(c, holes) for c in t.children)
        return self.step(t, kids)

    def is_accepting(self, q) -> bool:
        return bool(self._accept(q))

    def accepts(self, t: Term) -> bool:
        return self.is_accepting(self.run(t))

    def explore(self, symbols, max_states: int = 10000) -> int:
        """Close the state set under the given root symbols (terms whose
        children are placeholders); returns the number of states."""
        symbols = list(symbols)
        frontier = True
        while frontier:
            frontier = False
            known = list(self.states)
            for sym in symbols:
                n = len(sym.children)
                for kids in itertools.product(known, repeat=n):
                    try:
                        before = len(self.states)
                        self.step(sym, kids)
                    except (SortError, TermError, ValueError):
                        continue
                    if len(self.states) > before:
                        frontier = True
                    if len(self.states) > max_states:
                        raise CapacityError(f"more than {max_states} states")
        return len(self.states)

    def to_json(self) -> dict:
        names = {q: f"q{i}" for q, i in self.states.items()}
        trans = []
        for (op, kids), q in sorted(self.table.items(), key=lambda kv: (kv[0][0], [names[k] for k in kv[0][1]])):
            trans.append({"op": op, "args": [names[k] for k in kids], "to": names[q]})
        return {"name": self.name, "signature": self.sig.name if self.sig else None,
                "states": [names[q] for q in self.states],
                "describe": {names[q]: _describe(q) for q in self.states},
                "transitions": trans,
                "accepting": [names[q] for q in self.states if self.is_accepting(q)]}


def _describe(q) -> str:
    if hasattr(q, "text"):
        return q.text()
    return repr(q)


def automaton_from_json(d: dict) -> TreeAutomaton:
    """A finite table automaton; missing transitions raise TermError."""
    table = {}
    for tr in d["transitions"]:
        table[(tr["op"], tuple(tr["args"]))] = tr["to"]
    acc = set(d["accepting"])
    sig = d.get("signature")

    def step(t, kids):
        key = (op_key(t), kids)
        if key not in table:
            raise TermError(f"no transition for {key[0]} on {list(kids)}")
        return table[key]

    a = TreeAutomaton(get_signature(sig) if sig else None, step, lambda q: q in acc, d.get("name", "table"))
    for q in d["states"]:
        a._intern(q)
    a.table.update(table)
    return a


def automaton_dumps(a: TreeAutomaton) -> str:
    return json.dumps(a.to_json(), indent=2, sort_keys=True)


def _same_sig(a: TreeAutomaton, b: TreeAutomaton):
    if (a.sig and a.sig.name) != (b.sig and b.sig.name):
        raise TermError("automata over different signatures")


def product(a: TreeAutomaton, b: TreeAutomaton, mode: str = "and") -> TreeAutomaton:
    """Pair automaton; ``mode`` is and, or, or minus for the accepting condition."""
    _same_sig(a, b)
    how = {"and": lambda x, y: x and y, "or": lambda x, y: x or y, "minus": lambda x, y: x and not y}[mode]

    def step(t, kids):
        return (a.step(t, tuple(k[0] for k in kids)), b.step(t, tuple(k[1] for k in kids)))

    return TreeAutomaton(a.sig, step, lambda q: how(a.is_accepting(q[0]), b.is_accepting(q[1])),
                         f"({a.name} {mode} {b.name})")


def intersection(a, b):
    return product(a, b, "and")


def union(a, b):
    return product(a, b, "or")


def difference(a, b):
    return product(a, b, "minus")


def complement(a: TreeAutomaton) -> TreeAutomaton:
    return TreeAutomaton(a.sig, a.step, lambda q: not a.is_accepting(q), f"(not {a.name})")


def preimage(a: TreeAutomaton, ctx: Term, hole: str = "1") -> TreeAutomaton:
    """Accepts t iff ``a`` accepts ctx[t]."""
    holes = [s.params[0] for p, s in _subterms(ctx) if s.op == "hole"]
    if len(holes) != 1:
        raise TermError("the context must contain exactly one hole")
    hole = holes[0]

    def acc(q):
        try:
            return a.is_accepting(a.run(ctx, {hole: q}))
        except (SortError, TermError, ValueError):
            return False  # ctx[t] is undefined

    return TreeAutomaton(a.sig, a.step, acc, f"{a.name}^-1[{print_term(ctx)}]")


def _subterms(t, path=()):
    yield path, t
    for i, c in enumerate(t.children):
        yield from _subterms(c, path + (i,))


def restrict(a: TreeAutomaton, sig: SignatureDef | str) -> TreeAutomaton:
    sig = get_signature(sig) if isinstance(sig, str) else sig
    if a.sig is not None and not (sig.ops <= a.sig.ops and sig.consts <= a.sig.consts):
        raise TermError(f"{sig.name} is not a subsignature of {a.sig.name}")
    return TreeAutomaton(sig, a.step, a.is_accepting, f"{a.name}|{sig.name}")


def accept_all(sig) -> TreeAutomaton:
    return TreeAutomaton(sig, lambda t, kids: "*", lambda q: True, "all")


# ---------------------------------------------------------------- congruence evaluators

@dataclass
class Operation:
    name: str
    arity: int
    fn: Callable

    def __call__(self, *args):
        return self.fn(*args)


@dataclass
class CongruenceEvaluator:
    """``label`` is promised to factor through a congruence for ``ops``."""
    name: str
    label: Callable
    domain: Callable            # size bound -> list of values
    ops: list = field(default_factory=list)
    accept: Callable | None = None

    def __call__(self, x):
        return self.label(x)

    def accepts(self, x) -> bool:
        if self.accept is None:
            raise ValueError(f"{self.name} has no acceptance predicate")
        return bool(self.accept(self.label(x)))


@dataclass
class CongruenceReport:
    ok: bool
    checks: int
    witness: dict | None = None

    def __bool__(self):
        return self.ok


def _sort_of(x):
    if isinstance(x, MultiGraph):
        return ("m", x.constants)
    return x.sort


def check_congruence(ev: CongruenceEvaluator, sig=None, size_bound: int = 3, samples: int = 300,
                     seed: int = 0, max_domain: int = 20000) -> CongruenceReport:
    """For each operation: arguments with equal labels must give results with
    equal labels.  Every combination of class representatives is checked with
    each argument position varied over its whole class, then random argument
    tuples are compared with their representatives."""
    names = None
    if sig is not None:
        s = get_signature(sig) if isinstance(sig, str) else sig
        names = s.ops | s.consts
    dom = list(ev.domain(size_bound))
    if len(dom) > max_domain:
        raise CapacityError(f"domain of {len(dom)} values exceeds {max_domain}")
    classes = {}
    for x in dom:
        classes.setdefault((_sort_of(x), ev.label(x)), []).append(x)
    keys = sorted(classes, key=repr)
    rep = {k: classes[k][0] for k in keys}
    cls_of = {}
    for k in keys:
        for x in classes[k]:
            cls_of[id(x)] = k
    rng = random.Random(seed)
    checks = 0

    def lab(op, args):
        try:
            return ("ok", ev.label(op(*args)))
        except (SortError, ValueError):
            return ("undefined",)

    for op in ev.ops:
        if names is not None and op.name not in names:
            continue
        for combo in itertools.product(keys, repeat=op.arity):
            base_args = [rep[k] for k in combo]
            base = lab(op, base_args)
            for i, k in enumerate(combo):
                for x in classes[k][1:]:
                    args = list(base_args)
                    args[i] = x
                    got = lab(op, args)
                    checks += 1
                    if got != base:
                        return CongruenceReport(False, checks, _witness(op, base_args, args, base, got))
        for _ in range(samples if op.arity > 1 else 0):
            args = [rng.choice(dom) for _ in range(op.arity)]
            base_args = [rep[cls_of[id(x)]] for x in args]
            base, got = lab(op, base_args), lab(op, args)
            checks += 1
            if got != base:
                return CongruenceReport(False, checks, _witness(op, base_args, args, base, got))
    return CongruenceReport(True, checks)


def _witness(op, a, b, la, lb):
    return {"operation": op.name, "arguments": [_show(x) for x in a], "label": repr(la),
            "equivalent_arguments": [_show(x) for x in b], "other_label": repr(lb)}


def _show(x):
    return st.to_json(x)


def _graphs(labels, bound, loops=True):
    out = []
    for k in range(len(labels) + 1):
        for C in itertools.combinations(sorted(labels), k):
            out += list(st.enumerate_structures(graph_sort(C), bound, up_to_iso=True))
    if not loops:
        out = [g for g in out if all(u != v for u, v in g.edges)]
    return out


def hr_operations(labels=("a", "b")) -> list:
    ops = [Operation("oplus", 2, st.oplus), Operation("parallel", 2, st.parallel),
           Operation("box", 2, st.box)]
    for a in labels:
        ops.append(Operation("srcfg", 1, lambda s, a=a: st.srcfg(s, a)))
        for b in labels:
            if a != b:
                ops.append(Operation("srcren", 1, lambda s, a=a, b=b: st.srcren(s, a, b)))
                ops.append(Operation("fus", 1, lambda s, a=a, b=b: st.fus(s, a, b)))
                ops.append(Operation("fus-to", 1, lambda s, a=a, b=b: st.fus_to(s, a, b)))
    ops.append(Operation("srcfg-all", 1, st.srcfg_all))
    return ops


def hrm_operations(labels=("a", "b")) -> list:
    from .terms import m_parallel
    ops = [Operation("oplus", 2, st.m_oplus), Operation("parallel", 2, m_parallel)]
    for a in labels:
        ops.append(Operation("srcfg", 1, lambda g, a=a: st.m_srcfg(g, a)))
        for b in labels:
            if a != b:
                ops.append(Operation("srcren", 1, lambda g, a=a, b=b: st.m_srcren(g, a, b)))
                ops.append(Operation("mfus", 1, lambda g, a=a, b=b: st.mfus(g, a, b)))
    return ops


def zeta_evaluator(labels=("a", "b"), schemes=()) -> CongruenceEvaluator:
    """Label = the type (sources and the relations among them); accepts the
    source-separated structures."""
    ops = hr_operations(labels)
    from .qfd import apply_scheme
    for sch in schemes:
        ops.append(Operation(f"scheme:{sch.name}", 1, lambda s, sch=sch: apply_scheme(sch, s)
                             if s.sort == sch.in_sort else _undefined()))
    return CongruenceEvaluator("zeta", st.compute_type, lambda b: _graphs(labels, b), ops,
                               accept=st.is_source_separated)


def _undefined():
    raise SortError("operation not applicable to this sort")


def parity_evaluator(labels=("a", "b")) -> CongruenceEvaluator:
    """Vertex-count parity: not a congruence (fusion may or may not merge vertices)."""
    return CongruenceEvaluator("parity", lambda s: s.size % 2, lambda b: _graphs(labels, b),
                               hr_operations(labels))


def _multis(labels, bound):
    return [st.inject_iota(g) for g in _graphs(labels, bound)]


MULTI = "MULTI"


def simplicity_label(g: MultiGraph):
    if st.has_multiedges(g):
        return MULTI
    u = st.simplify_u(g)
    return (st.compute_type(u), st.eta(u))


def simplicity_evaluator(labels=("a", "b")) -> CongruenceEvaluator:
    return CongruenceEvaluator("simplicity", simplicity_label, lambda b: _multis(labels, b),
                               hrm_operations(labels), accept=lambda q: q != MULTI)


def eta_only_evaluator(labels=("a", "b")) -> CongruenceEvaluator:
    """Multiplicity flag and the neighbour-pair relation without the type; too coarse."""
    def label(g):
        return (st.has_multiedges(g), st.eta(st.simplify_u(g)))
    return CongruenceEvaluator("eta-only", label, lambda b: _multis(labels, b), hrm_operations(labels))


# ---------------------------------------------------------------- simplicity automaton

def _type_of_const(t: Term) -> Structure:
    return st.compute_type(eval_term(t))


def _close_eta(pairs, vertex_of) -> frozenset:
    """All label pairs on distinct vertices whose vertices are related by ``pairs``."""
    rel = {(vertex_of[a], vertex_of[b]) for a, b in (tuple(p) for p in pairs)}
    rel |= {(y, x) for x, y in rel}
    out = set()
    for a, b in itertools.combinations(sorted(vertex_of), 2):
        x, y = vertex_of[a], vertex_of[b]
        if x != y and (x, y) in rel:
            out.add(frozenset((a, b)))
    return frozenset(out)


def simplicity_step(t: Term, kids):
    """One transition of the simplicity automaton on multigraph terms."""
    op, p = t.op, t.params
    if not kids:
        if op not in ("src", "loop", "edge", "v", "v-loop"):
            raise TermError(f"{op} has no multigraph meaning")
        return (_type_of_const(t), frozenset())
    if MULTI in kids:
        return MULTI
    if op == "oplus":
        (z1, e1), (z2, e2) = kids
        return (st.compute_type(st.oplus(z1, z2)), e1 | e2)
    if op == "parallel":
        ctx = derive_parallel(kids[0][0].sort.constants, kids[1][0].sort.constants)
        return _run_ctx(ctx, {"1": kids[0], "2": kids[1]})
    (z, e), = kids
    if op == "srcren":
        a, b = p
        z2 = st.compute_type(st.srcren(z, a, b))
        return (z2, frozenset(frozenset(b if c == a else c for c in pr) for pr in e))
    if op == "srcfg":
        (a,) = p
        return (st.compute_type(st.srcfg(z, a)), frozenset(pr for pr in e if a not in pr))
    if op in ("mfus", "fus"):
        a, b = p
        if a not in z.sources or b not in z.sources:
            raise SortError(f"unknown source in {op}")
        if z.sources[a] == z.sources[b]:
            return (z, e)
        if st.predict_mfus_multiedge(z, e, a, b):
            return MULTI
        fused = st.fus(z, a, b)
        vertex_of = dict(fused.sources)
        # old pairs, closed over the labels that now share a vertex
        pairs = set(_close_eta(e, vertex_of))
        # the fused vertex as a new common neighbour
        w = fused.sources[a]
        outs = {y for x, y in fused.edges if x == w}
        ins = {x for x, y in fused.edges if y == w}
        for c, d in itertools.combinations(sorted(vertex_of), 2):
            x, y = vertex_of[c], vertex_of[d]
            if x != y and ((x in outs and y in outs) or (x in ins and y in ins)):
                pairs.add(frozenset((c, d)))
        return (st.compute_type(fused), frozenset(pairs))
    raise TermError(f"{op} has no multigraph meaning")


def _run_ctx(ctx: Term, holes):
    if ctx.op == "hole":
        return holes[ctx.params[0]]
    kids = tuple(_run_ctx(c, holes) for c in ctx.children)
    if ctx.op == "fus":
        ctx = Term("mfus", ctx.params, ctx.children)
    return simplicity_step(ctx, kids)


def simplicity_automaton() -> TreeAutomaton:
    """Accepts the HRM terms whose value has no multiple edges."""
    return TreeAutomaton("HRM", simplicity_step, lambda q: q != MULTI, "simple")


# ---------------------------------------------------------------- primality over the modular signature

NONPRIME, ONE, PRIME_IN, PRIME_OUT = "non-prime", "1", "prime-in-L", "prime-not-in-L"


def prime_class(g: Structure, in_L: Callable | None = None) -> str:
    from .modular import is_prime
    if any(u == v for u, v in g.edges):
        raise SortError("the primality classes are defined on loop-free graphs")
    if g.size == 1:
        return ONE
    if not is_prime(g):
        return NONPRIME
    return PRIME_IN if (in_L or is_prime)(g) else PRIME_OUT


def prime_evaluator(F, in_L: Callable | None = None) -> CongruenceEvaluator:
    """Four classes on loop-free graphs; operations are compositions by the prime graphs in F."""
    from .modular import FamilyF
    from .terms import modular_compose
    fam = FamilyF(F)
    ops = [Operation(f"compose:{i}", h.size, lambda *gs, h=h: modular_compose(h, list(gs)))
           for i, h in enumerate(fam.graphs)]

    def dom(bound):
        return [g for g in _graphs((), bound, loops=False) if g.size >= 1]
    return CongruenceEvaluator("prime", lambda g: prime_class(g, in_L), dom, ops,
                               accept=lambda q: q == PRIME_IN)


def prime_automaton(F, in_L: Callable | None = None) -> TreeAutomaton:
    from .modular import FamilyF
    fam = FamilyF(F)

    def step(t, kids):
        if t.op == "v":
            return ONE
        if t.op == "compose":
            h = quotient_graph(t.params[0], len(kids))
            if h not in fam:
                raise TermError("quotient graph not in F")
            if all(k == ONE for k in kids):
                return prime_class(h, in_L)
            return NONPRIME
        raise TermError(f"{t.op} is outside the loop-free modular signature")

    sig = SignatureDef("MODULAR", frozenset({"compose"}), frozenset({"v"}),
                       modular_quotients=tuple(fam.graphs))
    return TreeAutomaton(sig, step, lambda q: q == PRIME_IN, "prime")


# ---------------------------------------------------------------- first-order recognizers

_QFD_OPS = {"srcren", "srcfg", "srcfg-all", "fus", "fus-to", "del", "fusrel", "add", "ren", "fg",
            "mdf", "mark", "scheme"}
_COMPOSITE = {"parallel", "box", "otimes"}


def compile_fo_recognizer(sentence, d: int, sig: SignatureDef | str | None = "S") -> TreeAutomaton:
    """States are depth-``d`` Hintikka types; disjoint union and the
    quantifier-free definable operations act on them directly."""
    from .logic import drop_absent_relations, free_vars, qdepth, theory_oplus, theory_qfd, fo_theory, type_satisfies
    if free_vars(sentence):
        raise ValueError("the formula must be a sentence")
    if qdepth(sentence) > d:
        raise ValueError(f"sentence depth {qdepth(sentence)} exceeds {d}")
    sig = get_signature(sig) if isinstance(sig, str) else sig
    bad = sig.ops - _QFD_OPS - _COMPOSITE - {"oplus", "apply-scheme"}
    if bad:
        raise TermError(f"operations {sorted(bad)} are neither disjoint union nor quantifier-free definable")
    schemes = {}

    def scheme_for(node, sort):
        key = (op_key(node), sort)
        if key not in schemes:
            schemes[key] = unary_scheme(node, sort)
        return schemes[key]

    def step(t, kids):
        op = t.op
        if not kids:
            return fo_theory(eval_term(t), d)
        if op == "oplus":
            return theory_oplus(*kids)
        if op == "parallel":
            ctx = derive_parallel(kids[0].sort.constants, kids[1].sort.constants)
            return inner(ctx, {"1": kids[0], "2": kids[1]})
        if op == "box":
            ctx = derive_parallel(kids[0].sort.constants, kids[1].sort.constants)
            return inner(Term("srcfg-all", (), (ctx,)), {"1": kids[0], "2": kids[1]})
        if op == "otimes":
            u = theory_oplus(*kids)
            for pq in t.params[0]:
                u = a.step(Term("add", pq, (Term("hole", ("_",)),)), (u,))
            return u
        return theory_qfd(scheme_for(t, kids[0].sort), kids[0], d)

    def inner(ctx, holes):
        # derived contexts may use symbols outside the user's signature
        if ctx.op == "hole":
            return holes[ctx.params[0]]
        return a.step(ctx, tuple(inner(c, holes) for c in ctx.children))

    def accepting(q):
        # a port absent from the sort is an empty unary relation
        return type_satisfies(q, drop_absent_relations(sentence, q.sort))

    a = TreeAutomaton(sig, step, accepting, f"fo[{d}]")
    return a
