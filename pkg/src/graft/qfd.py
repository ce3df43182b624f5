"""Quantifier-free definable operations as checked data.

A scheme has a domain formula ``delta`` in ``x1``, one formula per output
relation in ``x1..xn`` and closed source-reassignment formulas ``kappa``.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field

from . import logic as L
from .logic import (FALSE, TRUE, Const, Eq, Rel, Var, conj, disj, neg, implies,
                    parse_formula, to_sexpr)
from .structures import (EDGE, CapacityError, Sort, SortError, Structure, add_edges,
                         enumerate_types, graph_sort, is_source_separated, mdf, oplus)


class SchemeError(ValueError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass
class Violation:
    condition: str
    detail: str
    witness: Structure | None = None
    assignment: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .structures import to_json
        return {"condition": self.condition, "detail": self.detail,
                "witness": to_json(self.witness) if self.witness is not None else None,
                "assignment": dict(self.assignment)}


def xs(n: int) -> list:
    return [Var(L.scheme_var(i + 1)) for i in range(n)]


class QfdScheme:
    __slots__ = ("in_sort", "out_sort", "delta", "phi", "kappa", "name", "_compiled")

    def __init__(self, in_sort: Sort, out_sort: Sort, delta, phi: dict, kappa: dict,
                 name: str | None = None, check: bool = True):
        self.in_sort = in_sort
        self.out_sort = out_sort
        self.delta = delta
        self.phi = dict(phi)
        self.kappa = {k: v for k, v in kappa.items() if v != FALSE}
        self.name = name
        self._compiled = None
        if check:
            bad = validate_scheme(self)
            if bad is not None:
                raise SchemeError(f"invalid scheme ({bad.condition}): {bad.detail}", bad)

    def kappa_of(self, c: str, d: str):
        return self.kappa.get((c, d), FALSE)

    def compiled(self):
        if self._compiled is None:
            dl = L.compile_formula(self.delta, ["x1"])
            ph = {r: L.compile_formula(self.phi[r], [L.scheme_var(i + 1) for i in range(ar)])
                  for r, ar in self.out_sort.relations}
            kp = {k: L.compile_formula(f, []) for k, f in self.kappa.items()}
            self._compiled = (dl, ph, kp)
        return self._compiled

    def __repr__(self):
        return f"QfdScheme({self.name or '?'}: {self.in_sort} -> {self.out_sort})"

    def to_json(self) -> dict:
        kap = {}
        for (c, d), f in sorted(self.kappa.items()):
            kap.setdefault(d, {})[c] = to_sexpr(f)
        return {"in": self.in_sort.to_json(), "out": self.out_sort.to_json(),
                "delta": to_sexpr(self.delta),
                "phi": {r: to_sexpr(self.phi[r]) for r in sorted(self.phi)},
                "kappa": kap}


def scheme_from_json(d: dict, check: bool = True) -> QfdScheme:
    if "builtin" in d:
        ins = Sort.of(d["in"].get("relations", {}), d["in"].get("constants", []))
        return builtin(d["builtin"], d.get("params", []), ins)
    ins = Sort.of(d["in"].get("relations", {}), d["in"].get("constants", []))
    outs = Sort.of(d["out"].get("relations", {}), d["out"].get("constants", []))
    phi = {r: parse_formula(t) for r, t in d.get("phi", {}).items()}
    kappa = {}
    for dd, row in d.get("kappa", {}).items():
        for c, t in row.items():
            kappa[(c, dd)] = parse_formula(t)
    return QfdScheme(ins, outs, parse_formula(d.get("delta", "true")), phi, kappa, d.get("name"), check)


def scheme_dumps(sch: QfdScheme) -> str:
    return json.dumps(sch.to_json(), sort_keys=True)


# ---------------------------------------------------------------- validation

def _syntax(sch: QfdScheme):
    ins, outs = sch.in_sort, sch.out_sort

    def check(f, allowed_vars, what, closed=False):
        if not L.is_qf(f):
            return Violation("syntax", f"{what} has a quantifier")
        try:
            L._check_symbols(f, ins, allowed_vars)
        except L.FormulaError as e:
            return Violation("syntax", f"{what}: {e}")
        return None

    v = check(sch.delta, ["x1"], "delta")
    if v:
        return v
    for r, ar in outs.relations:
        if r not in sch.phi:
            return Violation("syntax", f"no defining formula for output relation {r}")
        v = check(sch.phi[r], [L.scheme_var(i + 1) for i in range(ar)], f"phi[{r}]")
        if v:
            return v
    for r in sch.phi:
        if not outs.has_rel(r):
            return Violation("syntax", f"formula given for {r}, which is not an output relation")
    for (c, d), f in sch.kappa.items():
        if c not in ins.constants or d not in outs.constants:
            return Violation("syntax", f"kappa[{c},{d}] uses labels outside the sorts")
        v = check(f, [], f"kappa[{c},{d}]")
        if v:
            return v
    return None


def validate_scheme(sch: QfdScheme) -> Violation | None:
    """None if the scheme is valid, else the first violated condition with a witness."""
    v = _syntax(sch)
    if v:
        return v
    ins, outs = sch.in_sort, sch.out_sort
    C, D = ins.constants, outs.constants

    def refute(f, cond, detail):
        w = L.qf_counterexample(f, ins)
        if w is None:
            return None
        return Violation(cond, detail, w[0], w[1])

    for d in D:
        for c, c2 in itertools.combinations(C, 2):
            f = implies(conj(sch.kappa_of(c, d), sch.kappa_of(c2, d)), Eq(Const(c), Const(c2)))
            v = refute(f, "uniqueness", f"kappa[{c},{d}] and kappa[{c2},{d}] hold on distinct elements")
            if v:
                return v
        v = refute(disj(*(sch.kappa_of(e, d) for e in C)), "existence", f"no source found for {d}")
        if v:
            return v
        for c in C:
            f = implies(sch.kappa_of(c, d), L.substitute(sch.delta, {"x1": Const(c)}))
            v = refute(f, "domain", f"kappa[{c},{d}] selects an element outside delta")
            if v:
                return v
    for r, ar in outs.relations:
        guard = conj(*(L.substitute(sch.delta, {"x1": x}) for x in xs(ar)))
        v = refute(implies(sch.phi[r], guard), "guard", f"phi[{r}] relates elements outside delta")
        if v:
            return v
    return None


def is_valid(sch: QfdScheme) -> bool:
    return validate_scheme(sch) is None


# ---------------------------------------------------------------- application

def apply_scheme(sch: QfdScheme, s: Structure) -> Structure:
    if s.sort != sch.in_sort:
        raise SortError(f"structure of sort {s.sort} given to a scheme on {sch.in_sort}")
    dl, ph, kp = sch.compiled()
    dom = [x for x in range(s.size) if dl(s, x)]
    pos = {x: i for i, x in enumerate(dom)}
    tt = {}
    for r, ar in sch.out_sort.relations:
        f = ph[r]
        tt[r] = {tuple(pos[x] for x in args) for args in itertools.product(dom, repeat=ar) if f(s, *args)}
    src = {}
    for d in sch.out_sort.constants:
        vals = {s.sources[c] for c in sch.in_sort.constants if (c, d) in kp and kp[(c, d)](s)}
        assert len(vals) == 1, f"scheme gives {len(vals)} values for source {d}"
        x = vals.pop()
        assert x in pos, f"source {d} lands outside the domain"
        src[d] = pos[x]
    return Structure(sch.out_sort, len(dom), tt, src)


def apply_scheme_interpreted(sch: QfdScheme, s: Structure) -> Structure:
    """Same as :func:`apply_scheme` through the reference evaluator."""
    if s.sort != sch.in_sort:
        raise SortError(f"structure of sort {s.sort} given to a scheme on {sch.in_sort}")
    dom = [x for x in range(s.size) if L.eval_formula(s, sch.delta, {"x1": x})]
    pos = {x: i for i, x in enumerate(dom)}
    tt = {}
    for r, ar in sch.out_sort.relations:
        names = [L.scheme_var(i + 1) for i in range(ar)]
        tt[r] = {tuple(pos[x] for x in args) for args in itertools.product(dom, repeat=ar)
                 if L.eval_formula(s, sch.phi[r], dict(zip(names, args)))}
    src = {}
    for d in sch.out_sort.constants:
        vals = {s.sources[c] for c in sch.in_sort.constants if L.eval_formula(s, sch.kappa_of(c, d))}
        assert len(vals) == 1, f"scheme gives {len(vals)} values for source {d}"
        src[d] = pos[vals.pop()]
    return Structure(sch.out_sort, len(dom), tt, src)


# ---------------------------------------------------------------- builtins

def _identity_phi(sort: Sort) -> dict:
    return {r: Rel(r, tuple(xs(ar))) for r, ar in sort.relations}


def _identity_kappa(consts, rename=None) -> dict:
    rename = rename or {}
    return {(c, rename.get(c, c)): TRUE for c in consts}


def identity_scheme(sort: Sort) -> QfdScheme:
    return QfdScheme(sort, sort, TRUE, _identity_phi(sort), _identity_kappa(sort.constants), "id")


def _need_port(sort: Sort, p: str):
    if not sort.has_rel(p) or sort.arity(p) != 1:
        raise SortError(f"{p} is not a port label of {sort}")


def _fus_scheme(sort: Sort, a: str, b: str) -> QfdScheme:
    """Identify the a-source with the b-source; the b element survives."""
    if a == b:
        raise SortError("fus needs two distinct labels")
    for c in (a, b):
        if c not in sort.constants:
            raise SortError(f"unknown source {c}")
    A, B = Const(a), Const(b)

    def dlt(t):
        return disj(neg(Eq(t, A)), Eq(A, B))
    phi = {}
    for r, ar in sort.relations:
        xv = xs(ar)
        alts = []
        for J in itertools.product((False, True), repeat=ar):
            ys = tuple(A if J[i] else xv[i] for i in range(ar))
            alts.append(conj(*(Eq(xv[i], B) for i in range(ar) if J[i]), Rel(r, ys)))
        phi[r] = conj(disj(*alts), *(dlt(x) for x in xv))
    kappa = {}
    for d in sort.constants:
        for c in sort.constants:
            if d == a:
                f = Eq(Const(c), B) if c != b else TRUE
            else:
                f = conj(Eq(Const(c), Const(d)), neg(Eq(Const(d), A)))
                if c == b:
                    f = disj(f, Eq(Const(d), A))
            kappa[(c, d)] = f
    return QfdScheme(sort, sort, dlt(Var("x1")), phi, kappa, f"fus[{a},{b}]")


def builtin(name: str, params, sort: Sort) -> QfdScheme:
    """Named schemes: id, srcren a b, srcfg a, fus a b, fus-to a b, inclusion r:n...,
    add p q, mdf p:q..., ren p q, fg p, mark i."""
    params = [str(p) for p in params]
    if name == "id":
        return identity_scheme(sort)
    if name == "srcren":
        a, b = params
        if a not in sort.constants:
            raise SortError(f"unknown source {a}")
        if b in sort.constants and b != a:
            raise SortError(f"source {b} already present")
        out = sort.with_constants([c for c in sort.constants if c != a] + [b])
        return QfdScheme(sort, out, TRUE, _identity_phi(sort), _identity_kappa(sort.constants, {a: b}),
                         f"srcren[{a},{b}]")
    if name == "srcfg":
        (a,) = params
        if a not in sort.constants:
            raise SortError(f"unknown source {a}")
        rest = [c for c in sort.constants if c != a]
        return QfdScheme(sort, sort.with_constants(rest), TRUE, _identity_phi(sort),
                         _identity_kappa(rest), f"srcfg[{a}]")
    if name == "srcfg-all":
        return QfdScheme(sort, sort.with_constants(()), TRUE, _identity_phi(sort), {}, "srcfg-all")
    if name == "fus":
        return _fus_scheme(sort, *params)
    if name == "fus-to":
        a, b = params
        g = compose_schemes(builtin("srcfg", [a], sort), _fus_scheme(sort, a, b))
        g.name = f"fus-to[{a},{b}]"
        return g
    if name == "inclusion":
        rels = dict(sort.relations)
        for p in params:
            r, _, ar = p.partition(":")
            ar = int(ar or 1)
            if rels.get(r, ar) != ar:
                raise SortError(f"relation {r} already has another arity")
            rels[r] = ar
        out = sort.with_relations(rels)
        phi = _identity_phi(sort)
        for r, ar in out.relations:
            phi.setdefault(r, FALSE)
        return QfdScheme(sort, out, TRUE, phi, _identity_kappa(sort.constants), "inclusion")
    if name == "add":
        p, q = params
        if p == q:
            raise SortError("add needs distinct port labels")
        _need_port(sort, p)
        _need_port(sort, q)
        phi = _identity_phi(sort)
        x1, x2 = xs(2)
        phi[EDGE] = disj(Rel(EDGE, (x1, x2)), conj(Rel(p, (x1,)), Rel(q, (x2,))))
        return QfdScheme(sort, sort, TRUE, phi, _identity_kappa(sort.constants), f"add[{p},{q}]")
    if name in ("mdf", "ren", "fg"):
        if name == "mdf":
            pairs = [tuple(p.split(":")) for p in params if ":" in p]
            targets = [p for p in params if ":" not in p]
        elif name == "ren":
            p, q = params
            if p == q:
                raise SortError("ren needs distinct labels")
            _need_port(sort, p)
            pairs = [(r, r) for r in sort.ports if r != p] + [(p, q)]
            targets = []
        else:
            (p,) = params
            _need_port(sort, p)
            pairs = [(r, r) for r in sort.ports if r != p]
            targets = []
        return mdf_scheme(sort, pairs, targets)
    if name == "del":
        pairs = [tuple(p.split(":")) for p in params]
        for a, b in pairs:
            if a == b or a not in sort.constants or b not in sort.constants:
                raise SortError(f"bad pair ({a},{b}) for del")
        if not sort.has_rel(EDGE):
            raise SortError("del acts on graphs")
        x1, x2 = xs(2)
        kill = []
        for a, b in pairs:
            A, B = Const(a), Const(b)
            kill.append(disj(conj(Eq(x1, A), Eq(x2, B)), conj(Eq(x1, B), Eq(x2, A))))
        phi = _identity_phi(sort)
        phi[EDGE] = conj(Rel(EDGE, (x1, x2)), *(neg(k) for k in kill))
        return QfdScheme(sort, sort, TRUE, phi, _identity_kappa(sort.constants), "del")
    if name == "mark":
        (i,) = params
        out = graph_sort(sort.constants, [i])
        phi = {EDGE: Rel(EDGE, tuple(xs(2))), i: TRUE}
        return QfdScheme(sort, out, TRUE, phi, _identity_kappa(sort.constants), f"mark[{i}]")
    raise SchemeError(f"unknown builtin scheme {name}")


def mdf_scheme(sort: Sort, pairs, targets=()) -> QfdScheme:
    if not sort.has_rel(EDGE):
        raise SortError("mdf acts on graphs")
    pairs = sorted(set((str(p), str(q)) for p, q in pairs))
    for p, _ in pairs:
        _need_port(sort, p)
    ports = sorted(set(q for _, q in pairs) | set(targets))
    out = graph_sort(sort.constants, ports)
    (x1,) = xs(1)
    phi = {EDGE: Rel(EDGE, tuple(xs(2)))}
    for q in ports:
        phi[q] = disj(*(Rel(p, (x1,)) for p, q2 in pairs if q2 == q))
    return QfdScheme(sort, out, TRUE, phi, _identity_kappa(sort.constants), "mdf")


# ---------------------------------------------------------------- composition

def _tidy(f):
    try:
        return L.normalize_qf(f)
    except CapacityError:
        return f


def compose_schemes(g2: QfdScheme, g1: QfdScheme) -> QfdScheme:
    """Scheme for ``g2 after g1``."""
    if g1.out_sort != g2.in_sort:
        raise SortError(f"cannot compose: {g1.out_sort} is not {g2.in_sort}")
    delta = _tidy(conj(g1.delta, L.backward_translate(g1, g2.delta)))
    phi = {}
    for r, ar in g2.out_sort.relations:
        guard = conj(*(L.substitute(delta, {"x1": x}) for x in xs(ar)))
        phi[r] = _tidy(conj(L.backward_translate(g1, g2.phi[r]), guard))
    kappa = {}
    for b in g1.in_sort.constants:
        for d in g2.out_sort.constants:
            parts = []
            for c in g1.out_sort.constants:
                k2 = g2.kappa_of(c, d)
                if k2 == FALSE or g1.kappa_of(b, c) == FALSE:
                    continue
                parts.append(conj(g1.kappa_of(b, c), L.backward_translate(g1, k2)))
            kappa[(b, d)] = _tidy(disj(*parts))
    name = f"{g2.name or '?'}.{g1.name or '?'}"
    return QfdScheme(g1.in_sort, g2.out_sort, delta, phi, kappa, name)


# ---------------------------------------------------------------- source separation

def separation_counterexample(sch: QfdScheme):
    """A source-separated type whose image is not separated, or None."""
    for t in enumerate_types(sch.in_sort, separated_only=True):
        img = apply_scheme(sch, t)
        if not is_source_separated(img):
            return t
    return None


def preserves_source_separation(sch: QfdScheme) -> bool:
    return separation_counterexample(sch) is None


def separation_condition_holds(sch: QfdScheme) -> bool:
    """Closed-formula check: under distinct sources, no input source feeds two outputs."""
    C = sch.in_sort.constants
    distinct = conj(*(neg(Eq(Const(c), Const(c2))) for c, c2 in itertools.combinations(C, 2)))
    for c in C:
        for d, d2 in itertools.combinations(sch.out_sort.constants, 2):
            f = implies(conj(distinct, sch.kappa_of(c, d)), neg(sch.kappa_of(c, d2)))
            if not L.qf_valid(f, sch.in_sort):
                return False
    return True


# ---------------------------------------------------------------- splitting over a disjoint union

def _fold(f):
    """Propagate true/false constants."""
    if isinstance(f, L.Not):
        return neg(_fold(f.arg))
    if isinstance(f, L.And):
        return conj(*(_fold(a) for a in f.args))
    if isinstance(f, L.Or):
        return disj(*(_fold(a) for a in f.args))
    return f


def _side_reduce(f, var_side: dict, c1: set, R1: set, R2: set, known: dict):
    """Replace atoms that are false in a disjoint sum, and closed atoms whose
    side has a known type, by truth values.  ``var_side`` gives 1 or 2 per variable."""

    def side(t):
        if isinstance(t, Var):
            return var_side[t.name]
        return 1 if t.name in c1 else 2

    def walk(g):
        if isinstance(g, (Eq, Rel)):
            terms = (g.left, g.right) if isinstance(g, Eq) else g.args
            sides = {side(t) for t in terms}
            if len(sides) == 2:
                return FALSE
            (s,) = sides
            if isinstance(g, Rel) and g.name not in (R1 if s == 1 else R2):
                return FALSE
            if not any(isinstance(t, Var) for t in terms) and known.get(s) is not None:
                return TRUE if L.eval_formula(known[s], g) else FALSE
            return g
        if isinstance(g, L.Not):
            return L.Not(walk(g.arg))
        if isinstance(g, L.And):
            return L.And(tuple(walk(a) for a in g.args))
        if isinstance(g, L.Or):
            return L.Or(tuple(walk(a) for a in g.args))
        return g
    return _fold(walk(f))


def _unary_atoms(f, v: str) -> list:
    out = []
    for a in L._qf_atoms(f):
        if v in L.free_vars(a):
            b = L.substitute(a, {v: Var("x1")}) if v != "x1" else a
            if b not in out:
                out.append(b)
    return out


@dataclass
class UnionSplit:
    g1: QfdScheme
    g2: QfdScheme
    f_seq: list
    aux1: dict  # port label -> frozenset of true atoms
    aux2: dict

    def apply(self, x1: Structure, x2: Structure) -> Structure:
        return run_ops(self.f_seq, oplus(apply_scheme(self.g1, x1), apply_scheme(self.g2, x2)))


def run_ops(seq, g: Structure) -> Structure:
    for op in seq:
        if op[0] == "add":
            g = add_edges(g, op[1], op[2])
        elif op[0] == "mdf":
            g = mdf(g, op[1])
        else:
            raise ValueError(f"unknown operation {op[0]}")
    return g


def split_over_union(h: QfdScheme, sort1: Sort, sort2: Sort, z1: Structure, z2: Structure) -> UnionSplit:
    """Express ``h(x1 + x2)`` as VR operations applied to ``g1(x1) + g2(x2)``
    for ``x1``, ``x2`` of types ``z1``, ``z2``."""
    if h.out_sort.constants:
        raise SchemeError("the output sort carries constants; no splitting is possible")
    if set(sort1.constants) & set(sort2.constants):
        raise SortError("part sorts share constants")
    if sort1.union(sort2) != h.in_sort:
        raise SortError(f"{sort1} and {sort2} do not combine to {h.in_sort}")
    if not h.out_sort.is_graph() or not h.out_sort.has_rel(EDGE):
        raise SortError("the output sort must be a graph with ports")
    if z1.sort != sort1 or z2.sort != sort2:
        raise SortError("types do not match the part sorts")
    Q = list(h.out_sort.ports)
    c1 = set(sort1.constants)
    R1, R2 = set(sort1.rel), set(sort2.rel)
    known = {1: z1, 2: z2}
    nums = [int(q) for q in Q if q.isdigit()]
    k = 1 + max(nums, default=0)

    def red(f, sides, closed_both):
        kn = known if closed_both else {s: known[s] for s in known if s not in sides.values()}
        return _side_reduce(f, sides, c1, R1, R2, kn)

    delta_i = {i: red(h.delta, {"x1": i}, False) for i in (1, 2)}
    port_i = {i: {q: red(h.phi[q], {"x1": i}, False) for q in Q} for i in (1, 2)}
    edge_ii = {i: red(h.phi[EDGE], {"x1": i, "x2": i}, False) for i in (1, 2)}
    cross12 = red(h.phi[EDGE], {"x1": 1, "x2": 2}, True)
    cross21 = red(h.phi[EDGE], {"x1": 2, "x2": 1}, True)

    atoms1 = _unary_atoms(cross12, "x1")
    for a in _unary_atoms(cross21, "x2"):
        if a not in atoms1:
            atoms1.append(a)
    atoms2 = _unary_atoms(cross12, "x2")
    for a in _unary_atoms(cross21, "x1"):
        if a not in atoms2:
            atoms2.append(a)
    atoms1.sort(key=L.atom_key)
    atoms2.sort(key=L.atom_key)
    if len(atoms1) > 12 or len(atoms2) > 12:
        raise CapacityError("too many distinguishing atoms for auxiliary ports")

    def patterns(atoms, start):
        out = {}
        for mask in range(1 << len(atoms)):
            bits = [(mask >> (len(atoms) - 1 - j)) & 1 for j in range(len(atoms))]
            out[str(start + mask)] = tuple(bool(b) for b in bits)
        return out
    pat1 = patterns(atoms1, k + 1)
    ell = k + (1 << len(atoms1))
    pat2 = patterns(atoms2, ell + 1)

    def theta(atoms, bits, dl):
        return conj(dl, *(a if b else neg(a) for a, b in zip(atoms, bits)))

    def part_scheme(i, sort, pats, atoms):
        ports = list(Q) + list(pats)
        out = graph_sort((), ports)
        dl = delta_i[i]
        x1, x2 = xs(2)
        phi = {EDGE: conj(edge_ii[i], dl, L.substitute(dl, {"x1": x2}))}
        for q in Q:
            phi[q] = conj(port_i[i][q], dl)
        for lab, bits in pats.items():
            phi[lab] = theta(atoms, bits, dl)
        return QfdScheme(sort, out, dl, phi, {}, f"split{i}")

    g1 = part_scheme(1, sort1, pat1, atoms1)
    g2 = part_scheme(2, sort2, pat2, atoms2)

    seq = []
    for n, b1 in pat1.items():
        for u, b2 in pat2.items():
            v12 = {}
            for a, bit in zip(atoms1, b1):
                v12[a] = bit
            for a, bit in zip(atoms2, b2):
                v12[L.substitute(a, {"x1": Var("x2")})] = bit
            if _truth(cross12, v12):
                seq.append(("add", n, u))
            v21 = {}
            for a, bit in zip(atoms2, b2):
                v21[a] = bit
            for a, bit in zip(atoms1, b1):
                v21[L.substitute(a, {"x1": Var("x2")})] = bit
            if _truth(cross21, v21):
                seq.append(("add", u, n))
    seq.append(("mdf", tuple((q, q) for q in Q)))
    return UnionSplit(g1, g2, seq, {p: frozenset(a for a, b in zip(atoms1, bits) if b) for p, bits in pat1.items()},
                      {p: frozenset(a for a, b in zip(atoms2, bits) if b) for p, bits in pat2.items()})


def _truth(f, val) -> bool:
    if f == TRUE:
        return True
    if f == FALSE:
        return False
    return L._bool_eval(f, val)


def realizers(z: Structure, rng: random.Random, count: int, max_extra: int = 2, density: float = 0.4):
    """Random structures whose type is ``z``: extra elements and tuples touching them."""
    out = []
    sort = z.sort
    for _ in range(count):
        extra = rng.randint(0, max_extra)
        n = z.size + extra
        tt = {r: set(ts) for r, ts in z.tuples.items()}
        for r, ar in sort.relations:
            for args in itertools.product(range(n), repeat=ar):
                if any(x >= z.size for x in args) and rng.random() < density:
                    tt[r].add(args)
        out.append(Structure(sort, n, tt, z.sources))
    return out


# ---------------------------------------------------------------- random schemes (test support)

def random_qf(rng: random.Random, sort: Sort, vars_, depth: int = 2):
    terms = [Var(v) for v in vars_] + [Const(c) for c in sort.constants]
    if not terms:
        return rng.choice([TRUE, FALSE])

    def atom():
        rels = list(sort.relations)
        if rels and rng.random() < 0.7:
            r, ar = rng.choice(rels)
            return Rel(r, tuple(rng.choice(terms) for _ in range(ar)))
        return Eq(rng.choice(terms), rng.choice(terms))

    def go(d):
        if d == 0 or rng.random() < 0.3:
            return atom()
        k = rng.random()
        if k < 0.3:
            return neg(go(d - 1))
        if k < 0.65:
            return conj(go(d - 1), go(d - 1))
        return disj(go(d - 1), go(d - 1))
    return go(depth)


def random_scheme(rng: random.Random, in_sort: Sort, out_sort: Sort | None = None, tries: int = 200) -> QfdScheme:
    """A valid scheme with random formulas; sources are reassigned by a random
    map guarded so that the validity conditions hold."""
    if out_sort is None:
        rels = {}
        for i in range(rng.randint(1, 2)):
            rels[f"r{i}"] = rng.randint(1, 2)
        consts = [c + "'" for c in in_sort.constants if rng.random() < 0.7]
        out_sort = Sort.of(rels, consts)
    if out_sort.constants and not in_sort.constants:
        raise SortError("cannot define constants from a constant-free sort")
    C = in_sort.constants
    for _ in range(tries):
        body = random_qf(rng, in_sort, ["x1"], 2)
        # keep every source whose element may be chosen
        delta = disj(body, *(Eq(Var("x1"), Const(c)) for c in C))
        phi = {}
        for r, ar in out_sort.relations:
            f = random_qf(rng, in_sort, [L.scheme_var(i + 1) for i in range(ar)], 2)
            phi[r] = conj(f, *(L.substitute(delta, {"x1": x}) for x in xs(ar)))
        kappa = {}
        for d in out_sort.constants:
            # pick c0 by default, switch to c1 when a closed test holds
            c0 = rng.choice(C)
            c1 = rng.choice(C)
            test = random_qf(rng, in_sort, [], 1)
            if c0 == c1:
                kappa[(c0, d)] = TRUE
            else:
                kappa[(c0, d)] = neg(test)
                kappa[(c1, d)] = test
        sch = QfdScheme(in_sort, out_sort, delta, phi, kappa, "rnd", check=False)
        if validate_scheme(sch) is None:
            return sch
    raise SchemeError("no valid random scheme found")
