"""Terms over the graph and structure signatures: parsing, typing, evaluation,
derived operations and a few term families."""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass

from . import sexpr
from . import structures as st
from .structures import (EDGE, CapacityError, MultiGraph, Sort, SortError, Structure,
                         check_cap, graph_sort, make_graph)


class TermError(ValueError):
    def __init__(self, msg, path=None, pos=None):
        self.path = list(path or [])
        self.pos = pos
        where = ""
        if pos is not None:
            where = f"at offset {pos}: "
        elif path:
            where = f"at /{'/'.join(map(str, path))}: "
        super().__init__(where + msg)


@dataclass(frozen=True)
class Term:
    op: str
    params: tuple = ()
    children: tuple = ()

    def __str__(self):
        return print_term(self)

    @property
    def leaves(self) -> int:
        return 1 if not self.children else sum(c.leaves for c in self.children)


# name -> (parameter shape, arity); shapes: "" none, "l" label, "ll" two labels,
# "P" list of pairs, "S" scheme name + params; arity -1 means variadic (>= 2)
OPS = {
    "oplus": ("", 2), "parallel": ("", 2), "box": ("", 2),
    "srcren": ("ll", 1), "srcfg": ("l", 1), "srcfg-all": ("", 1), "fus": ("ll", 1),
    "fus-to": ("ll", 1), "mfus": ("ll", 1), "del": ("P", 1), "fusrel": ("P", 1),
    "add": ("ll", 1), "ren": ("ll", 1), "fg": ("l", 1), "mdf": ("P", 1), "mark": ("l", 1),
    "otimes": ("P", 2), "scheme": ("S", 1), "apply-scheme": ("l", 1),
    "compose": ("P", -1),
    "econ-add-vertex": ("", 1), "econ-add-edge": ("", 1), "econ-shift": ("", 1),
    "econ-swap": ("", 1), "econ-forget": ("", 1),
}
CONSTS = {
    "port": "l", "port-loop": "l", "src": "l", "loop": "l", "edge": "ll", "atom": "l",
    "v": "", "v-loop": "", "empty": "", "hole": "l", "econ-zero": "",
}


# ---------------------------------------------------------------- parsing / printing

def parse_term(text: str) -> Term:
    return _from_sexpr(sexpr.parse(text))


def _sym(e, what):
    if isinstance(e, list):
        raise TermError(f"expected {what}, found a list", pos=sexpr.where(e))
    return str(e)


def _pairs(e):
    if not isinstance(e, list):
        raise TermError("expected a list of pairs", pos=sexpr.where(e))
    out = []
    for pr in e:
        if not isinstance(pr, list) or len(pr) != 2:
            raise TermError("expected a pair (x y)", pos=sexpr.where(pr))
        out.append((_sym(pr[0], "label"), _sym(pr[1], "label")))
    return tuple(sorted(set(out)))


def _from_sexpr(e) -> Term:
    if not isinstance(e, list):
        if str(e) in CONSTS and CONSTS[str(e)] == "":
            return Term(str(e))
        raise TermError(f"unexpected symbol {e}", pos=sexpr.where(e))
    if not e:
        raise TermError("empty term", pos=sexpr.where(e))
    head = _sym(e[0], "operation")
    rest = e[1:]
    if head in CONSTS:
        shape = CONSTS[head]
        if len(rest) != len(shape):
            raise TermError(f"{head} takes {len(shape)} labels", pos=sexpr.where(e))
        return Term(head, tuple(_sym(x, "label") for x in rest))
    if head not in OPS:
        raise TermError(f"unknown operation {head}", pos=sexpr.where(e))
    shape, arity = OPS[head]
    if shape in ("l", "ll"):
        params = tuple(_sym(x, "label") for x in rest[:len(shape)])
        rest = rest[len(shape):]
    elif shape == "P":
        if not rest:
            raise TermError(f"{head} needs a pair list", pos=sexpr.where(e))
        params = (_pairs(rest[0]),)
        rest = rest[1:]
    elif shape == "S":
        if len(rest) < 2 or not isinstance(rest[1], list):
            raise TermError("scheme needs a name and a parameter list", pos=sexpr.where(e))
        params = (_sym(rest[0], "scheme name"), tuple(_sym(x, "parameter") for x in rest[1]))
        rest = rest[2:]
    else:
        params = ()
    if (arity >= 0 and len(rest) != arity) or (arity < 0 and len(rest) < 2):
        raise TermError(f"{head} applied to {len(rest)} arguments", pos=sexpr.where(e))
    if len(params) != len(shape) and shape not in ("P", "S"):
        raise TermError(f"{head} has missing labels", pos=sexpr.where(e))
    return Term(head, params, tuple(_from_sexpr(c) for c in rest))


def print_term(t: Term) -> str:
    if t.op in CONSTS:
        if not t.params and t.op in ("v", "v-loop", "empty", "econ-zero"):
            return f"({t.op})"
        return "(" + " ".join((t.op,) + t.params) + ")"
    shape, _ = OPS[t.op]
    parts = [t.op]
    if shape in ("l", "ll"):
        parts += list(t.params)
    elif shape == "P":
        parts.append("(" + " ".join(f"({a} {b})" for a, b in t.params[0]) + ")")
    elif shape == "S":
        parts.append(t.params[0])
        parts.append("(" + " ".join(t.params[1]) + ")")
    parts += [print_term(c) for c in t.children]
    return "(" + " ".join(parts) + ")"


# ---------------------------------------------------------------- signatures

@dataclass(frozen=True)
class SignatureDef:
    name: str
    ops: frozenset
    consts: frozenset
    multigraph: bool = False
    econ: bool = False
    modular_quotients: tuple | None = None  # allowed quotient graphs for compose

    def admits(self, op: str) -> bool:
        return op in self.ops or op in self.consts or op == "hole"


_GRAPH_CONSTS = frozenset({"src", "edge", "loop", "v", "v-loop"})
_PORT_CONSTS = frozenset({"port", "port-loop"})

SIGNATURES = {
    "S": SignatureDef("S", frozenset(k for k in OPS if k not in ("mfus", "compose") and not k.startswith("econ")),
                      frozenset(CONSTS) - {"econ-zero", "hole"}),
    "VR": SignatureDef("VR", frozenset({"oplus", "add", "mdf", "ren", "fg"}), _PORT_CONSTS),
    "VRPLUS": SignatureDef("VRPLUS", frozenset({"oplus", "add", "mdf", "ren", "fg", "mark", "scheme",
                                                "apply-scheme"}), _PORT_CONSTS | {"v", "v-loop"}),
    "VRPI": SignatureDef("VRPI", frozenset({"oplus", "add", "ren"}), _PORT_CONSTS),
    "NLC": SignatureDef("NLC", frozenset({"otimes", "fg", "ren"}), _PORT_CONSTS),
    "HR": SignatureDef("HR", frozenset({"oplus", "srcren", "srcfg", "fus"}), _GRAPH_CONSTS),
    "HR_PAR": SignatureDef("HR_PAR", frozenset({"parallel", "srcren", "srcfg", "fus"}), _GRAPH_CONSTS),
    "HR_SEP": SignatureDef("HR_SEP", frozenset({"oplus", "srcren", "srcfg", "fus-to"}), _GRAPH_CONSTS),
    "HR_SEP_PAR": SignatureDef("HR_SEP_PAR", frozenset({"parallel", "srcren", "srcfg", "fus-to"}),
                               _GRAPH_CONSTS),
    "HR_FG": SignatureDef("HR_FG", frozenset({"srcfg-all", "parallel"}), _GRAPH_CONSTS),
    "HR_REN": SignatureDef("HR_REN", frozenset({"srcren", "parallel"}), _GRAPH_CONSTS),
    "CS": SignatureDef("CS", frozenset({"box"}), _GRAPH_CONSTS),
    "HRM": SignatureDef("HRM", frozenset({"oplus", "parallel", "srcren", "srcfg", "mfus"}),
                        _GRAPH_CONSTS, multigraph=True),
    "MODULAR": SignatureDef("MODULAR", frozenset({"compose"}), frozenset({"v", "v-loop"})),
    "ECON": SignatureDef("ECON", frozenset(k for k in OPS if k.startswith("econ")),
                         frozenset({"econ-zero"}), econ=True),
}


def get_signature(name: str) -> SignatureDef:
    try:
        return SIGNATURES[name.upper().replace("-", "_")]
    except KeyError:
        raise TermError(f"unknown signature {name}") from None


def modular_signature(quotients) -> SignatureDef:
    """MODULAR restricted to composition by the given (prime) quotient graphs."""
    from .modular import is_prime
    qs = []
    for h in quotients:
        if not is_prime(h):
            raise SortError("quotient graphs of a modular signature must be prime")
        qs.append(h)
    return SignatureDef("MODULAR", frozenset({"compose"}), frozenset({"v", "v-loop"}),
                        modular_quotients=tuple(qs))


# ---------------------------------------------------------------- typing

OSORT, USORT = "o", "u"


def _fresh(label: str, used) -> str:
    x = label + "~"
    while x in used:
        x += "~"
    return x


def typecheck_term(t: Term, sig: SignatureDef | str | None = None, holes=None, schemes=None):
    """Sort of ``t``; raises TermError naming the first ill-typed node."""
    if isinstance(sig, str):
        sig = get_signature(sig)
    return _type(t, sig, holes or {}, schemes or {}, [])


def _type(t, sig, holes, schemes, path):
    def err(msg):
        raise TermError(msg, path)

    if sig is not None and not sig.admits(t.op):
        err(f"{t.op} is not in signature {sig.name}")
    kids = [_type(c, sig, holes, schemes, path + [i]) for i, c in enumerate(t.children)]
    op, p = t.op, t.params
    econ_ops = op.startswith("econ")
    if econ_ops:
        if op == "econ-zero":
            return OSORT
        if kids[0] != OSORT:
            err(f"{op} expects an ordered graph")
        return USORT if op == "econ-forget" else OSORT
    if any(k in (OSORT, USORT) for k in kids):
        err("ordered-graph value used outside the economical signature")
    try:
        if op == "hole":
            if p[0] not in holes:
                err(f"hole {p[0]} has no declared sort")
            return holes[p[0]]
        if op == "port" or op == "port-loop":
            if p[0] == EDGE:
                err("'edge' cannot be a port label")
            return graph_sort((), [p[0]])
        if op in ("src", "loop"):
            return graph_sort([p[0]])
        if op == "edge":
            if p[0] == p[1]:
                err("edge needs two distinct source labels; use loop")
            return graph_sort(p)
        if op == "atom":
            return Sort.of({}, [p[0]])
        if op in ("v", "v-loop"):
            return graph_sort()
        if op == "empty":
            return Sort.of()
        k = kids[0] if kids else None
        if op == "oplus":
            return kids[0].union(kids[1])
        if op == "parallel":
            return kids[0].union(kids[1], disjoint=False)
        if op == "box":
            if kids[0].constants != kids[1].constants:
                err("box needs equal source sets")
            return kids[0].union(kids[1], disjoint=False).with_constants(())
        if op in ("srcren", "srcfg", "fus", "fus-to", "mfus"):
            for lab in p[:1] if op in ("srcren", "srcfg") else p:
                if lab not in k.constants:
                    err(f"source {lab} not in {k}")
            if op == "srcren":
                if p[1] in k.constants and p[1] != p[0]:
                    err(f"source {p[1]} already present")
                return k.with_constants([c for c in k.constants if c != p[0]] + [p[1]])
            if op == "srcfg":
                return k.with_constants([c for c in k.constants if c != p[0]])
            if p[0] == p[1]:
                err(f"{op} needs two distinct labels")
            if op == "fus-to":
                return k.with_constants([c for c in k.constants if c != p[0]])
            return k
        if op == "srcfg-all":
            return k.with_constants(())
        if op in ("del", "fusrel"):
            for a, b in p[0]:
                if a == b:
                    err("pair relation must be anti-reflexive")
                if a not in k.constants or b not in k.constants:
                    err(f"unknown source in pair ({a},{b})")
            return k
        if op in ("add", "ren", "fg", "mdf", "mark", "otimes"):
            for s in kids:
                if not s.is_graph() or not s.has_rel(EDGE):
                    err(f"{op} expects graphs with ports")
        if op == "add":
            if p[0] == p[1]:
                err("add needs distinct port labels")
            for lab in p:
                if lab not in k.ports:
                    err(f"port {lab} not in {k}")
            return k
        if op == "ren":
            if p[0] == p[1]:
                err("ren needs distinct labels")
            if p[0] not in k.ports:
                err(f"port {p[0]} not in {k}")
            return graph_sort(k.constants, [q for q in k.ports if q != p[0]] + [p[1]])
        if op == "fg":
            if p[0] not in k.ports:
                err(f"port {p[0]} not in {k}")
            return graph_sort(k.constants, [q for q in k.ports if q != p[0]])
        if op == "mdf":
            for a, _ in p[0]:
                if a not in k.ports:
                    err(f"port {a} not in {k}")
            return graph_sort(k.constants, [b for _, b in p[0]])
        if op == "mark":
            if p[0] == EDGE:
                err("'edge' cannot be a port label")
            return graph_sort(k.constants, [p[0]])
        if op == "otimes":
            P, Q = set(kids[0].ports), set(kids[1].ports)
            if P & Q:
                err("otimes needs disjoint port sets")
            for a, b in p[0]:
                if not ((a in P and b in Q) or (a in Q and b in P)):
                    err(f"pair ({a},{b}) does not cross the two port sets")
            return kids[0].union(kids[1])
        if op == "scheme":
            from .qfd import builtin
            return builtin(p[0], p[1], k).out_sort
        if op == "apply-scheme":
            if p[0] not in schemes:
                err(f"unknown scheme {p[0]}")
            sch = schemes[p[0]]
            if sch.in_sort != k:
                err(f"scheme {p[0]} expects {sch.in_sort}, got {k}")
            return sch.out_sort
        if op == "compose":
            n = len(kids)
            for s in kids:
                if s != graph_sort():
                    err("compose expects graphs without ports or sources")
            for i, j in p[0]:
                if not (i.isdigit() and j.isdigit() and 1 <= int(i) <= n and 1 <= int(j) <= n):
                    err(f"quotient edge ({i},{j}) outside 1..{n}")
            if sig is not None and sig.modular_quotients is not None:
                h = quotient_graph(p[0], n)
                if not any(h == q for q in sig.modular_quotients):
                    err("quotient graph not in the signature")
            return graph_sort()
    except SortError as e:
        raise TermError(str(e), path) from None
    err(f"cannot type {op}")


# ---------------------------------------------------------------- evaluation

def quotient_graph(pairs, n: int) -> Structure:
    return make_graph(n, [(int(i) - 1, int(j) - 1) for i, j in pairs])


def value_sort(v):
    if isinstance(v, MultiGraph):
        return graph_sort(v.constants)
    if isinstance(v, OrderedGraph):
        return OSORT
    return v.sort


def eval_term(t: Term, sig: SignatureDef | str | None = None, holes=None, schemes=None):
    """Value of ``t``; HRM yields a MultiGraph, ECON an ordered graph or a graph."""
    if isinstance(sig, str):
        sig = get_signature(sig)
    holes = holes or {}
    if sig is not None:
        typecheck_term(t, sig, {k: value_sort(v) for k, v in holes.items()}, schemes)
    multi = sig is not None and sig.multigraph
    return _eval(t, holes, schemes or {}, multi)


def _eval(t, holes, schemes, multi):
    op, p = t.op, t.params
    if op == "hole":
        if p[0] not in holes:
            raise TermError(f"hole {p[0]} not bound")
        return holes[p[0]]
    if op.startswith("econ"):
        return _econ(t, holes, schemes, multi)
    if multi:
        return _eval_multi(t, holes, schemes)
    if op == "port":
        return make_graph(1, ports={p[0]: [0]})
    if op == "port-loop":
        return make_graph(1, [(0, 0)], ports={p[0]: [0]})
    if op == "src":
        return make_graph(1, sources={p[0]: 0})
    if op == "loop":
        return make_graph(1, [(0, 0)], sources={p[0]: 0})
    if op == "edge":
        return make_graph(2, [(0, 1)], sources={p[0]: 0, p[1]: 1})
    if op == "atom":
        return st.single(Sort.of({}, [p[0]]))
    if op == "v":
        return make_graph(1)
    if op == "v-loop":
        return make_graph(1, [(0, 0)])
    if op == "empty":
        return st.empty()
    kids = [_eval(c, holes, schemes, multi) for c in t.children]
    k = kids[0] if kids else None
    if op == "oplus":
        return st.oplus(*kids)
    if op == "parallel":
        return st.parallel(*kids)
    if op == "box":
        return st.box(*kids)
    if op == "srcren":
        return st.srcren(k, *p)
    if op == "srcfg":
        return st.srcfg(k, *p)
    if op == "srcfg-all":
        return st.srcfg_all(k)
    if op == "fus":
        return st.fus(k, *p)
    if op == "fus-to":
        return st.fus_to(k, *p)
    if op == "mfus":
        raise TermError("mfus is evaluated in the multigraph signature HRM")
    if op == "del":
        return st.del_rel(k, p[0])
    if op == "fusrel":
        return st.fus_rel(k, p[0])
    if op == "add":
        return st.add_edges(k, *p)
    if op == "ren":
        return st.ren(k, *p)
    if op == "fg":
        return st.fg(k, *p)
    if op == "mdf":
        return st.mdf(k, p[0])
    if op == "mark":
        return st.mark(k, p[0])
    if op == "otimes":
        return st.otimes(p[0], *kids)
    if op == "scheme":
        from .qfd import apply_scheme, builtin
        return apply_scheme(builtin(p[0], p[1], k.sort), k)
    if op == "apply-scheme":
        from .qfd import apply_scheme
        return apply_scheme(schemes[p[0]], k)
    if op == "compose":
        return modular_compose(quotient_graph(p[0], len(kids)), kids)
    raise TermError(f"cannot evaluate {op}")


def m_parallel(g: MultiGraph, h: MultiGraph) -> MultiGraph:
    shared = sorted(set(g.constants) & set(h.constants))
    used = set(g.constants) | set(h.constants)
    bars = {}
    for c in shared:
        bars[c] = _fresh(c, used)
        used.add(bars[c])
        h = st.m_srcren(h, c, bars[c])
    u = st.m_oplus(g, h)
    for c in shared:
        u = st.m_srcfg(st.mfus(u, c, bars[c]), bars[c])
    return u


def _eval_multi(t, holes, schemes):
    op, p = t.op, t.params
    if op == "src":
        return MultiGraph(1, [], {p[0]: 0})
    if op == "loop":
        return MultiGraph(1, [(0, 0)], {p[0]: 0})
    if op == "edge":
        return MultiGraph(2, [(0, 1)], {p[0]: 0, p[1]: 1})
    if op == "v":
        return MultiGraph(1)
    if op == "v-loop":
        return MultiGraph(1, [(0, 0)])
    kids = [_eval(c, holes, schemes, True) for c in t.children]
    if op == "oplus":
        return st.m_oplus(*kids)
    if op == "parallel":
        return m_parallel(*kids)
    if op == "srcren":
        return st.m_srcren(kids[0], *p)
    if op == "srcfg":
        return st.m_srcfg(kids[0], *p)
    if op == "mfus":
        return st.mfus(kids[0], *p)
    raise TermError(f"{op} has no multigraph meaning")


def strip_multi(t: Term) -> Term:
    """Replace every mfus by fus."""
    op = "fus" if t.op == "mfus" else t.op
    return Term(op, t.params, tuple(strip_multi(c) for c in t.children))


def plug(ctx: Term, args: dict) -> Term:
    """Substitute terms for holes."""
    if ctx.op == "hole":
        return args.get(ctx.params[0], ctx)
    if not ctx.children:
        return ctx
    return Term(ctx.op, ctx.params, tuple(plug(c, args) for c in ctx.children))


def subterms(t: Term, path=()):
    yield path, t
    for i, c in enumerate(t.children):
        yield from subterms(c, path + (i,))


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    kids = list(t.children)
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return Term(t.op, t.params, tuple(kids))


UNARY_QFD = ("srcren", "srcfg", "srcfg-all", "fus", "fus-to", "del", "fusrel", "add", "ren",
             "fg", "mdf", "mark", "scheme", "apply-scheme")


def unary_scheme(t: Term, in_sort: Sort, schemes=None):
    """The quantifier-free definable scheme computing the unary node ``t`` on ``in_sort``."""
    from .qfd import builtin, compose_schemes, identity_scheme
    op, p = t.op, t.params
    if op in ("srcren", "srcfg", "srcfg-all", "fus", "fus-to", "add", "ren", "fg", "mark"):
        return builtin(op, p, in_sort)
    if op == "mdf":
        return builtin("mdf", [f"{a}:{b}" for a, b in p[0]] + sorted({b for _, b in p[0]}), in_sort)
    if op == "del":
        return builtin("del", [f"{a}:{b}" for a, b in p[0]], in_sort)
    if op == "fusrel":
        g = identity_scheme(in_sort)
        for a, b in p[0]:
            g = compose_schemes(builtin("fus", (a, b), g.out_sort), g)
        return g
    if op == "scheme":
        return builtin(p[0], p[1], in_sort)
    if op == "apply-scheme":
        return (schemes or {})[p[0]]
    raise TermError(f"{op} is not a unary quantifier-free definable operation")


# ---------------------------------------------------------------- derived operations

def derive_parallel(c1, c2) -> Term:
    """Context over holes 1, 2 computing the parallel composition by
    renaming apart, disjoint union, fusion and forgetting."""
    shared = sorted(set(c1) & set(c2))
    used = set(c1) | set(c2)
    bars = {}
    for c in shared:
        bars[c] = _fresh(c, used)
        used.add(bars[c])
    right = Term("hole", ("2",))
    for c in shared:
        right = Term("srcren", (c, bars[c]), (right,))
    t = Term("oplus", (), (Term("hole", ("1",)), right))
    for c in shared:
        t = Term("fus", (c, bars[c]), (t,))
    for c in shared:
        t = Term("srcfg", (bars[c],), (t,))
    return t


def parallel_compose(s: Structure, t: Structure) -> Structure:
    return st.parallel(s, t)


def derive_box(c) -> Term:
    return Term("srcfg-all", (), (derive_parallel(c, c),))


def derive_otimes(J) -> Term:
    t = Term("oplus", (), (Term("hole", ("1",)), Term("hole", ("2",))))
    for p, q in sorted(set(J)):
        t = Term("add", (p, q), (t,))
    return t


def derived_hr(name: str, args, *values):
    """fus-to, srcfg-all, box, del and fusrel, written as compositions of basic operations."""
    if name == "fus-to":
        a, b = args
        return st.srcfg(st.fus(values[0], a, b), a)
    if name == "srcfg-all":
        s = values[0]
        for c in s.sort.constants:
            s = st.srcfg(s, c)
        return s
    if name == "box":
        return derived_hr("srcfg-all", (), st.parallel(*values))
    if name == "del":
        return st.del_rel(values[0], args)
    if name == "fusrel":
        return st.fus_rel(values[0], args)
    raise TermError(f"unknown derived operation {name}")


def modular_compose(h: Structure, parts) -> Structure:
    n = h.size
    if n < 2:
        raise SortError("composition needs a quotient with at least 2 vertices")
    if len(parts) != n:
        raise SortError(f"quotient has {n} vertices but {len(parts)} parts were given")
    for g in parts:
        if g.sort.constants or g.sort.ports:
            raise SortError("parts must be graphs without ports or sources")
    offs, k = [], 0
    for g in parts:
        offs.append(k)
        k += g.size
    edges = set()
    for i, g in enumerate(parts):
        edges |= {(u + offs[i], v + offs[i]) for u, v in g.edges}
    for i, j in h.edges:
        if i == j:
            continue
        for u in range(parts[i].size):
            for v in range(parts[j].size):
                edges.add((u + offs[i], v + offs[j]))
    return make_graph(k, edges)


def vr_term_for_modular(h: Structure) -> Term:
    n = h.size
    if n < 2:
        raise SortError("composition needs a quotient with at least 2 vertices")
    t = Term("mark", ("1",), (Term("hole", ("1",)),))
    for i in range(2, n + 1):
        t = Term("oplus", (), (t, Term("mark", (str(i),), (Term("hole", (str(i),)),))))
    for i, j in sorted(h.edges):
        if i != j:
            t = Term("add", (str(i + 1), str(j + 1)), (t,))
    return Term("mdf", ((),), (t,))


def modular_term(h: Structure, parts) -> Term:
    pairs = tuple(sorted((str(i + 1), str(j + 1)) for i, j in h.edges))
    return Term("compose", (pairs,), tuple(parts))


# ---------------------------------------------------------------- term families

def clique_term(n: int) -> Term:
    if n < 1:
        raise ValueError("n must be at least 1")
    t = Term("port", ("p",))
    for _ in range(n - 1):
        u = Term("oplus", (), (t, Term("port", ("q",))))
        t = Term("ren", ("q", "p"), (Term("add", ("p", "q"), (Term("add", ("q", "p"), (u,)),)),))
    return t


def path_core(n: int) -> Term:
    t = Term("add", ("a", "b"), (Term("oplus", (), (Term("port", ("a",)), Term("port", ("b",)))),))
    for _ in range(n):
        u = Term("add", ("b", "c"), (Term("oplus", (), (t, Term("port", ("c",)))),))
        t = Term("ren", ("c", "b"), (Term("ren", ("b", "a"), (u,)),))
    return t


def path_term(n: int) -> Term:
    if n < 0:
        raise ValueError("n must be non-negative")
    return Term("mdf", ((),), (path_core(n),))


def directed_path(n: int) -> Structure:
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


# ---------------------------------------------------------------- the economical signature

@dataclass(frozen=True)
class OrderedGraph:
    """Vertices are positions 0..n-1 (0 is least); edges are pairs i < j."""
    n: int
    edges: frozenset

    def forget(self) -> Structure:
        return make_graph(self.n, self.edges, symmetric=True)


def econ_step(op: str, g: OrderedGraph) -> OrderedGraph:
    n = g.n
    if op == "econ-add-vertex":
        return OrderedGraph(n + 1, frozenset((i + 1, j + 1) for i, j in g.edges))
    if n < 2:
        return g
    if op == "econ-add-edge":
        return OrderedGraph(n, g.edges | {(0, 1)})
    if op in ("econ-shift", "econ-swap"):
        if op == "econ-shift":
            def f(x):
                return (x - 1) % n
        else:
            def f(x):
                return 1 if x == 0 else 0 if x == 1 else x
        return OrderedGraph(n, frozenset(tuple(sorted((f(i), f(j)))) for i, j in g.edges))
    raise TermError(f"unknown economical operation {op}")


def _econ(t, holes, schemes, multi):
    if t.op == "econ-zero":
        return OrderedGraph(0, frozenset())
    g = _eval(t.children[0], holes, schemes, multi)
    if not isinstance(g, OrderedGraph):
        raise TermError(f"{t.op} expects an ordered graph")
    if t.op == "econ-forget":
        return g.forget()
    return econ_step(t.op, g)


def econ_eval(t: Term):
    return eval_term(t, "ECON")


ECON_UNARY = ("econ-add-vertex", "econ-add-edge", "econ-shift", "econ-swap")


def econ_search(max_n: int) -> dict:
    """Breadth-first search over ordered graphs with at most ``max_n`` vertices;
    maps each reached unordered graph (canonical) to a shortest witness term."""
    start = OrderedGraph(0, frozenset())
    term_of = {start: Term("econ-zero")}
    queue = deque([start])
    found = {}
    while queue:
        g = queue.popleft()
        u = g.forget()
        if u not in found:
            found[u] = Term("econ-forget", (), (term_of[g],))
        for op in ECON_UNARY:
            if op == "econ-add-vertex" and g.n >= max_n:
                continue
            h = econ_step(op, g)
            if h not in term_of:
                term_of[h] = Term(op, (), (term_of[g],))
                queue.append(h)
    return found


def all_simple_undirected(max_n: int) -> set:
    out = set()
    for n in range(max_n + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            out.add(make_graph(n, [pairs[i] for i in range(len(pairs)) if mask >> i & 1], symmetric=True))
    return out


# ---------------------------------------------------------------- clique-width

def cwd_exact(g: Structure, max_k: int, cap: int | None = 7):
    """Least number of port labels of a VR^pi term denoting ``g`` (ports ignored),
    or None if it exceeds ``max_k``."""
    res = cwd_search(g, max_k, cap)
    return None if res is None else res[0]


def cwd_search(g: Structure, max_k: int, cap: int | None = 7):
    """``(k, witness term)`` or None."""
    if g.sort.ports or g.sort.constants:
        raise SortError("cwd_exact expects a graph without ports or sources")
    check_cap(g.size, 7 if cap is None else cap, "cwd_exact")
    if g.size == 0:
        raise ValueError("clique-width of the empty graph is not defined")
    for k in range(1, max_k + 1):
        t = _CwdSearch(g, k).run()
        if t is not None:
            return k, t
    return None


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask(xs):
    m = 0
    for x in xs:
        m |= 1 << x
    return m


def _matchings(nl, nr, k):
    """Partial injective maps left -> right with nl + nr - |map| <= k."""
    out = []

    def go(i, cur, used):
        if i == nl:
            if nl + nr - len(cur) <= k:
                out.append(dict(cur))
            return
        go(i + 1, cur, used)
        for j in range(nr):
            if j not in used:
                cur[i] = j
                used.add(j)
                go(i + 1, cur, used)
                del cur[i]
                used.discard(j)
    go(0, {}, set())
    return out


class _CwdSearch:
    """States are (X, partition of X into label classes) with value exactly G[X].

    Any VR^pi term for G can be normalized so each edge is added at the union
    where its endpoints meet, so every subterm value is an induced subgraph.
    Vertices sharing a label must agree on all neighbours outside X."""

    def __init__(self, g: Structure, k: int):
        self.n, self.k = g.size, k
        self.E = {(u, v) for u, v in g.edges if u != v}
        self.loops = {u for u, v in g.edges if u == v}
        self.outn = [0] * self.n
        self.inn = [0] * self.n
        for u, v in self.E:
            self.outn[u] |= 1 << v
            self.inn[v] |= 1 << u
        self.full = (1 << self.n) - 1
        self.states = {}

    def twins_ok(self, X, block):
        rest = self.full & ~X
        sigs = {(self.outn[x] & rest, self.inn[x] & rest) for x in _bits(block)}
        return len(sigs) == 1

    def close(self, X, blocks, deriv, bucket):
        stack = [(blocks, deriv)]
        while stack:
            b, d = stack.pop()
            if b in bucket:
                continue
            bucket[b] = d
            bl = sorted(b)
            for i, j in itertools.combinations(range(len(bl)), 2):
                m = bl[i] | bl[j]
                if self.twins_ok(X, m):
                    nb = frozenset([m] + [bl[t] for t in range(len(bl)) if t not in (i, j)])
                    if nb not in bucket:
                        stack.append((nb, ("merge", b, bl[i], bl[j])))

    def combine(self, X1, b1, X2, b2):
        L, R = sorted(b1), sorted(b2)
        cross = [(u, v) for u, v in self.E
                 if (X1 >> u & 1 and X2 >> v & 1) or (X2 >> u & 1 and X1 >> v & 1)]
        X = X1 | X2
        for match in _matchings(len(L), len(R), self.k):
            blocks = [blk | R[match[i]] if i in match else blk for i, blk in enumerate(L)]
            blocks += [blk for j, blk in enumerate(R) if j not in match.values()]
            if not all(self.twins_ok(X, b) for b in blocks):
                continue
            where = {}
            for i, blk in enumerate(blocks):
                for x in _bits(blk):
                    where[x] = i
            need = set()
            ok = True
            for u, v in cross:
                if where[u] == where[v]:
                    ok = False
                    break
                need.add((where[u], where[v]))
            if ok:
                for a, b in need:
                    if any((u, v) not in self.E for u in _bits(blocks[a]) for v in _bits(blocks[b])):
                        ok = False
                        break
            if ok:
                adds = tuple(sorted((blocks[a], blocks[b]) for a, b in need))
                yield frozenset(blocks), match, adds

    def run(self):
        n = self.n
        for x in range(n):
            self.states[1 << x] = {frozenset([1 << x]): ("leaf", x)}
        for size in range(2, n + 1):
            for comb in itertools.combinations(range(n), size):
                X = _mask(comb)
                low = X & -X
                rest = X & ~low
                bucket = {}
                sub = rest
                while sub:
                    X2, X1 = sub, X & ~sub
                    sub = (sub - 1) & rest
                    if X1 not in self.states or X2 not in self.states:
                        continue
                    for b1 in list(self.states[X1]):
                        for b2 in list(self.states[X2]):
                            for blocks, match, adds in self.combine(X1, b1, X2, b2):
                                self.close(X, blocks, ("join", X1, b1, X2, b2, match, adds), bucket)
                if bucket:
                    self.states[X] = bucket
        if self.full not in self.states:
            return None
        blocks = min(self.states[self.full], key=lambda b: sorted(b))
        return self.build(self.full, blocks)[0]

    def build(self, X, blocks):
        """Witness term for a state plus the label of each block."""
        d = self.states[X][blocks]
        if d[0] == "leaf":
            op = "port-loop" if d[1] in self.loops else "port"
            return Term(op, ("1",)), {X: "1"}
        if d[0] == "merge":
            _, prev, b1, b2 = d
            t, lab = self.build(X, prev)
            lab = dict(lab)
            p, q = lab.pop(b1), lab.pop(b2)
            lab[b1 | b2] = q
            return Term("ren", (p, q), (t,)), lab
        _, X1, b1, X2, b2, match, adds = d
        t1, lab1 = self.build(X1, b1)
        t2, lab2 = self.build(X2, b2)
        L, R = sorted(b1), sorted(b2)
        want = {R[j]: lab1[L[i]] for i, j in match.items()}
        free = [str(i + 1) for i in range(self.k) if str(i + 1) not in lab1.values()]
        for blk in R:
            if blk not in want:
                want[blk] = free.pop(0)
        perm = {lab2[blk]: want[blk] for blk in R}
        labels = [str(i + 1) for i in range(self.k)]
        perm.update(zip([x for x in labels if x not in perm],
                        [x for x in labels if x not in perm.values()]))
        t2 = _relabel_term(t2, perm)
        lab = {}
        for i, blk in enumerate(L):
            lab[blk | R[match[i]] if i in match else blk] = lab1[blk]
        for j, blk in enumerate(R):
            if j not in match.values():
                lab[blk] = want[blk]
        t = Term("oplus", (), (t1, t2))
        for ba, bb in adds:
            t = Term("add", (lab[ba], lab[bb]), (t,))
        return t, lab


def _relabel_term(t: Term, m: dict) -> Term:
    """Apply a label substitution to every port label (injective on used labels)."""
    if t.op in ("port", "port-loop", "add", "ren"):
        ps = tuple(m.get(x, x) for x in t.params)
        return Term(t.op, ps, tuple(_relabel_term(c, m) for c in t.children))
    return Term(t.op, t.params, tuple(_relabel_term(c, m) for c in t.children))


def cwd_witness_value(t: Term) -> Structure:
    """Evaluate a VR^pi witness and forget its ports."""
    return st.mdf(eval_term(t, "VRPI"), [])


# ---------------------------------------------------------------- random terms (test support)

def random_hrm_term(rng: random.Random, leaves: int, labels=("a", "b"), multi: bool = True) -> Term:
    """Random well-sorted term over the HRM operations (or HR with fus when
    ``multi`` is false) whose sources stay within ``labels``."""
    return _rand_hr(rng, leaves, sorted(labels), multi)[0]


def _rand_hr(rng, leaves, labels, multi):
    if leaves == 1:
        k = rng.random()
        if k < 0.4 and len(labels) >= 2:
            a, b = rng.sample(labels, 2)
            t, C = Term("edge", (a, b)), {a, b}
        elif k < 0.6:
            a = rng.choice(labels)
            t, C = Term("loop", (a,)), {a}
        elif k < 0.9:
            a = rng.choice(labels)
            t, C = Term("src", (a,)), {a}
        else:
            t, C = Term("v"), set()
    else:
        k = rng.randint(1, leaves - 1)
        (t1, C1), (t2, C2) = _rand_hr(rng, k, labels, multi), _rand_hr(rng, leaves - k, labels, multi)
        op = "oplus" if not (C1 & C2) and rng.random() < 0.5 else "parallel"
        t, C = Term(op, (), (t1, t2)), C1 | C2
    for _ in range(rng.choice((0, 0, 1, 1, 2))):
        choices = [("srcfg", (a,)) for a in C]
        choices += [("srcren", (a, b)) for a in C for b in labels if b not in C]
        choices += [("mfus" if multi else "fus", (a, b)) for a in C for b in C if a != b]
        if not choices:
            break
        op, p = rng.choice(sorted(choices))
        t = Term(op, p, (t,))
        if op == "srcfg":
            C = C - {p[0]}
        elif op == "srcren":
            C = (C - {p[0]}) | {p[1]}
    return t, C
