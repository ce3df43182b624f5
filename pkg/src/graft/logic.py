"""First-order formulas over structures with sources.

Covers evaluation, canonical reduced forms (Boolean, quantifier-free and
first-order), a small-model decision procedure for quantifier-free
equivalence, Hintikka types of bounded depth and their composition under
disjoint union and quantifier-free definable operations.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

from . import sexpr
from .structures import CapacityError, SortError, Sort, Structure


class FormulaError(ValueError):
    pass


# ---------------------------------------------------------------- syntax

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


TRUE, FALSE = Top(), Bot()


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


ATOMIC = (Eq, Rel, Prop)


def var(name):
    return Var(name)


def const(name):
    return Const(name)


def eq(a, b):
    return Eq(_term(a), _term(b))


def rel(name, *args):
    return Rel(name, tuple(_term(a) for a in args))


def _term(t):
    if isinstance(t, (Var, Const)):
        return t
    return Var(str(t))


def neg(f):
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    return Not(f)


def conj(*fs):
    out = []
    for f in fs:
        if f == FALSE:
            return FALSE
        if f == TRUE:
            continue
        out.extend(f.args if isinstance(f, And) else [f])
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*fs):
    out = []
    for f in fs:
        if f == TRUE:
            return TRUE
        if f == FALSE:
            continue
        out.extend(f.args if isinstance(f, Or) else [f])
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def implies(a, b):
    return disj(neg(a), b)


def iff(a, b):
    return disj(conj(a, b), conj(neg(a), neg(b)))


# ---------------------------------------------------------------- parse / print

def parse_formula(text: str):
    return from_sexpr(sexpr.parse(text))


def _parse_term(e):
    if isinstance(e, list):
        if len(e) == 2 and e[0] == "const" and not isinstance(e[1], list):
            return Const(str(e[1]))
        raise sexpr.SexprError(f"bad term {sexpr.dump(e)}", sexpr.where(e))
    return Var(str(e))


def from_sexpr(e):
    if not isinstance(e, list):
        if e == "true":
            return TRUE
        if e == "false":
            return FALSE
        return Prop(str(e))
    if not e:
        raise sexpr.SexprError("empty formula", sexpr.where(e))
    head = e[0]
    args = e[1:]
    if head == "eq":
        if len(args) != 2:
            raise sexpr.SexprError("eq takes two terms", sexpr.where(e))
        return Eq(_parse_term(args[0]), _parse_term(args[1]))
    if head == "rel":
        if not args or isinstance(args[0], list):
            raise sexpr.SexprError("rel needs a relation name", sexpr.where(e))
        return Rel(str(args[0]), tuple(_parse_term(a) for a in args[1:]))
    if head == "not":
        if len(args) != 1:
            raise sexpr.SexprError("not takes one argument", sexpr.where(e))
        return Not(from_sexpr(args[0]))
    if head in ("and", "or"):
        fs = tuple(from_sexpr(a) for a in args)
        if not fs:
            return TRUE if head == "and" else FALSE
        if len(fs) == 1:
            return fs[0]
        return And(fs) if head == "and" else Or(fs)
    if head in ("implies", "iff"):
        a, b = (from_sexpr(x) for x in args)
        return Or((Not(a), b)) if head == "implies" else And((Or((Not(a), b)), Or((Not(b), a))))
    if head in ("exists", "forall"):
        if len(args) != 2 or isinstance(args[0], list):
            raise sexpr.SexprError(f"{head} takes a variable and a body", sexpr.where(e))
        body = from_sexpr(args[1])
        return Exists(str(args[0]), body) if head == "exists" else Forall(str(args[0]), body)
    raise sexpr.SexprError(f"unknown connective {head}", sexpr.where(e))


def term_str(t) -> str:
    return t.name if isinstance(t, Var) else f"(const {t.name})"


def to_sexpr(f) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Eq):
        return f"(eq {term_str(f.left)} {term_str(f.right)})"
    if isinstance(f, Rel):
        return "(rel " + " ".join([f.name] + [term_str(a) for a in f.args]) + ")"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(a) for a in f.args) + ")"
    if isinstance(f, Exists):
        return f"(exists {f.var} {to_sexpr(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var} {to_sexpr(f.body)})"
    raise FormulaError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- syntactic helpers

def free_vars(f) -> frozenset:
    if isinstance(f, Eq):
        return frozenset(t.name for t in (f.left, f.right) if isinstance(t, Var))
    if isinstance(f, Rel):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    return frozenset()


def all_vars(f) -> frozenset:
    if isinstance(f, (Exists, Forall)):
        return all_vars(f.body) | {f.var}
    if isinstance(f, Not):
        return all_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(all_vars(a) for a in f.args))
    return free_vars(f)


def constants_of(f) -> frozenset:
    if isinstance(f, Eq):
        return frozenset(t.name for t in (f.left, f.right) if isinstance(t, Const))
    if isinstance(f, Rel):
        return frozenset(t.name for t in f.args if isinstance(t, Const))
    if isinstance(f, Not):
        return constants_of(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(constants_of(a) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        return constants_of(f.body)
    return frozenset()


def relations_of(f) -> frozenset:
    if isinstance(f, Rel):
        return frozenset([(f.name, len(f.args))])
    if isinstance(f, Not):
        return relations_of(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(relations_of(a) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        return relations_of(f.body)
    return frozenset()


def qdepth(f) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + qdepth(f.body)
    if isinstance(f, Not):
        return qdepth(f.arg)
    if isinstance(f, (And, Or)):
        return max((qdepth(a) for a in f.args), default=0)
    return 0


def is_qf(f) -> bool:
    return qdepth(f) == 0


def size(f) -> int:
    if isinstance(f, Not):
        return 1 + size(f.arg)
    if isinstance(f, (And, Or)):
        return 1 + sum(size(a) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        return 1 + size(f.body)
    return 1


def _var_index(name: str):
    m = re.fullmatch(r"x(\d+)", name)
    return int(m.group(1)) if m else None


def fresh_var(avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    i = 1
    while f"x{i}" in avoid:
        i += 1
    return f"x{i}"


def _sub_term(t, m):
    if isinstance(t, Var) and t.name in m:
        return m[t.name]
    if isinstance(t, Const) and ("const", t.name) in m:
        return m[("const", t.name)]
    return t


def substitute(f, m: Mapping):
    """Simultaneous capture-avoiding substitution.

    Keys are variable names, or ``("const", c)`` to replace a constant.
    """
    if not m:
        return f
    if isinstance(f, Eq):
        return Eq(_sub_term(f.left, m), _sub_term(f.right, m))
    if isinstance(f, Rel):
        return Rel(f.name, tuple(_sub_term(a, m) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.arg, m))
    if isinstance(f, And):
        return And(tuple(substitute(a, m) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, m) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in m.items() if k != f.var}
        used = set()
        for k, v in inner.items():
            if isinstance(v, Var):
                used.add(v.name)
        v0 = f.var
        if v0 in used:
            nv = fresh_var(used | all_vars(f.body) | {k for k in inner if isinstance(k, str)})
            inner[v0] = Var(nv)
            v0 = nv
        return type(f)(v0, substitute(f.body, inner))
    return f


def drop_absent_relations(f, sort: Sort):
    """Replace atoms over relations missing from ``sort`` by false."""
    if isinstance(f, Rel):
        return f if sort.has_rel(f.name) else FALSE
    if isinstance(f, Not):
        return Not(drop_absent_relations(f.arg, sort))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(drop_absent_relations(a, sort) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, drop_absent_relations(f.body, sort))
    return f


# ---------------------------------------------------------------- evaluation

def _val(s: Structure, t, a):
    if isinstance(t, Var):
        if t.name not in a:
            raise FormulaError(f"unassigned variable {t.name}")
        return a[t.name]
    if t.name not in s.sources:
        raise FormulaError(f"unknown constant {t.name}")
    return s.sources[t.name]


def eval_formula(s: Structure, f, a: Mapping | None = None) -> bool:
    a = dict(a or {})
    return _eval(s, f, a)


def _eval(s, f, a):
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Eq):
        return _val(s, f.left, a) == _val(s, f.right, a)
    if isinstance(f, Rel):
        if f.name not in s.tuples:
            raise FormulaError(f"unknown relation {f.name}")
        return tuple(_val(s, t, a) for t in f.args) in s.tuples[f.name]
    if isinstance(f, Not):
        return not _eval(s, f.arg, a)
    if isinstance(f, And):
        return all(_eval(s, g, a) for g in f.args)
    if isinstance(f, Or):
        return any(_eval(s, g, a) for g in f.args)
    if isinstance(f, (Exists, Forall)):
        old = a.get(f.var, None)
        had = f.var in a
        want = isinstance(f, Exists)
        res = not want
        for x in range(s.size):
            a[f.var] = x
            if _eval(s, f.body, a) == want:
                res = want
                break
        if had:
            a[f.var] = old
        else:
            a.pop(f.var, None)
        return res
    if isinstance(f, Prop):
        raise FormulaError(f"propositional variable {f.name} has no meaning in a structure")
    raise FormulaError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- Boolean reduced forms

def _bool_eval(f, val: Mapping) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not _bool_eval(f.arg, val)
    if isinstance(f, And):
        return all(_bool_eval(g, val) for g in f.args)
    if isinstance(f, Or):
        return any(_bool_eval(g, val) for g in f.args)
    return val[f]


def boolean_components(f) -> list:
    """Maximal non-Boolean subformulas (atoms and quantified formulas)."""
    out = []

    def walk(g):
        if isinstance(g, (Top, Bot)):
            return
        if isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (And, Or)):
            for h in g.args:
                walk(h)
        elif g not in out:
            out.append(g)
    walk(f)
    return out


def _term_key(t):
    if isinstance(t, Var):
        i = _var_index(t.name)
        return (0, i if i is not None else 10 ** 9, t.name)
    return (1, 0, t.name)


def atom_key(a):
    if isinstance(a, Prop):
        i = re.fullmatch(r"p(\d+)", a.name)
        return (-1, (int(i.group(1)) if i else 10 ** 9, a.name))
    if isinstance(a, Eq):
        return (0, (_term_key(a.left), _term_key(a.right)))
    if isinstance(a, Rel):
        return (1, (a.name, tuple(_term_key(t) for t in a.args)))
    return (2, to_sexpr(a))


MAX_BOOL_ATOMS = 16


def truth_table(f, atoms) -> tuple:
    rows = []
    for bits in itertools.product((False, True), repeat=len(atoms)):
        rows.append(_bool_eval(f, dict(zip(atoms, bits))))
    return tuple(rows)


def _prime_implicants(k: int, ones: list) -> list:
    """Quine-McCluskey; implicants as (value, dontcare_mask)."""
    current = {(m, 0) for m in ones}
    primes = set()
    while current:
        nxt, used = set(), set()
        lst = sorted(current)
        groups = {}
        for v, msk in lst:
            groups.setdefault(msk, []).append(v)
        for msk, vals in groups.items():
            vs = set(vals)
            for v in vals:
                for b in range(k):
                    bit = 1 << b
                    if msk & bit or v & bit:
                        continue
                    w = v | bit
                    if w in vs:
                        nxt.add((v, msk | bit))
                        used.add((v, msk))
                        used.add((w, msk))
        primes |= current - used
        current = nxt
    return sorted(primes)


def normalize_bool(f, key=atom_key):
    """Canonical form: the disjunction of all prime implicants (Blake form)
    over the atoms the truth table actually depends on."""
    atoms = sorted(boolean_components(f), key=key)
    if len(atoms) > MAX_BOOL_ATOMS:
        raise CapacityError(f"{len(atoms)} distinct atoms is beyond the Boolean normaliser")
    table = truth_table(f, atoms)
    k = len(atoms)
    # support reduction
    relevant = []
    for i in range(k):
        bit = 1 << (k - 1 - i)
        if any(table[r] != table[r ^ bit] for r in range(len(table))):
            relevant.append(i)
    if not relevant:
        return TRUE if table[0] else FALSE
    sub = [atoms[i] for i in relevant]
    ks = len(sub)
    ones = []
    for m in range(1 << ks):
        row = 0
        for j, i in enumerate(relevant):
            if m >> (ks - 1 - j) & 1:
                row |= 1 << (k - 1 - i)
        if table[row]:
            ones.append(m)
    primes = _prime_implicants(ks, ones)
    terms = []
    for v, msk in primes:
        lits = []
        for j in range(ks):
            bit = 1 << (ks - 1 - j)
            if msk & bit:
                continue
            lits.append((j, 0 if v & bit else 1))
        terms.append(tuple(lits))
    terms.sort()
    disjuncts = []
    for lits in terms:
        parts = [sub[j] if pol == 0 else Not(sub[j]) for j, pol in lits]
        disjuncts.append(parts[0] if len(parts) == 1 else And(tuple(parts)))
    if not disjuncts:
        return FALSE
    return disjuncts[0] if len(disjuncts) == 1 else Or(tuple(disjuncts))


# ---------------------------------------------------------------- QF and FO reduced forms

def _simplify_atoms(f):
    if isinstance(f, Eq):
        if f.left == f.right:
            return TRUE
        a, b = sorted((f.left, f.right), key=_term_key)
        return Eq(a, b)
    if isinstance(f, Not):
        return Not(_simplify_atoms(f.arg))
    if isinstance(f, And):
        return And(tuple(_simplify_atoms(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_simplify_atoms(a) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, _simplify_atoms(f.body))
    return f


def _check_symbols(f, sort: Sort | None, vars_: Iterable[str] | None):
    if sort is not None:
        for r, ar in relations_of(f):
            if not sort.has_rel(r) or sort.arity(r) != ar:
                raise FormulaError(f"relation {r}/{ar} not in sort {sort}")
        for c in constants_of(f):
            if c not in sort.constants:
                raise FormulaError(f"constant {c} not in sort {sort}")
    if vars_ is not None:
        extra = free_vars(f) - set(vars_)
        if extra:
            raise FormulaError(f"free variables {sorted(extra)} not declared")


def normalize_qf(f, sort: Sort | None = None, vars_: Iterable[str] | None = None):
    if not is_qf(f):
        raise FormulaError("quantifier found in a quantifier-free normalisation")
    _check_symbols(f, sort, vars_)
    return normalize_bool(_simplify_atoms(f))


def normalize_fo(f, k: int):
    if qdepth(f) > k:
        raise FormulaError(f"quantifier depth {qdepth(f)} exceeds {k}")
    return _red(_simplify_atoms(f))


def _red(f):
    comps = boolean_components(f)
    m = {}
    for c in comps:
        if isinstance(c, (Exists, Forall)):
            X = free_vars(c)
            y = fresh_var(X)
            body = substitute(c.body, {c.var: Var(y)}) if y != c.var else c.body
            m[c] = type(c)(y, _red(_simplify_atoms(body)))
        else:
            m[c] = c
    g = _replace_components(f, m)
    return normalize_bool(g)


def _replace_components(f, m):
    if isinstance(f, Not):
        return Not(_replace_components(f.arg, m))
    if isinstance(f, And):
        return And(tuple(_replace_components(a, m) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_replace_components(a, m) for a in f.args))
    return m.get(f, f)


# ---------------------------------------------------------------- atom counting

def _terms(sort: Sort, vars_) -> list:
    return [Var(v) for v in vars_] + [Const(c) for c in sort.constants]


def generate_atoms(sort: Sort, vars_, simplified: bool = False) -> list:
    T = _terms(sort, list(vars_))
    out = []
    if simplified:
        out.append(TRUE)
        for a, b in itertools.combinations(T, 2):
            out.append(_simplify_atoms(Eq(a, b)))
    else:
        for a, b in itertools.product(T, repeat=2):
            out.append(Eq(a, b))
    for r, ar in sort.relations:
        for args in itertools.product(T, repeat=ar):
            out.append(Rel(r, tuple(args)))
    return out


def count_atoms(sort: Sort, n: int, simplified: bool = False) -> int:
    m = n + len(sort.constants)
    rels = sum(m ** ar for _, ar in sort.relations)
    if simplified:
        return 1 + m * (m - 1) // 2 + rels
    return m * m + rels


MAX_BOUND_BITS = 1 << 20


def _pow2(e: int) -> int:
    if e > MAX_BOUND_BITS:
        raise CapacityError(f"bound 2^{e} is too large to write down")
    return 1 << e


def reduced_count_bounds(sort: Sort, n: int, k: int):
    """Upper bounds (g, h) for reduced formulas of depth ``k`` over ``n`` variables,
    following the recursion g(0) <= 2^f, g(k) <= 2^2^h(k), h(k) <= 3 g(k-1, n+1)."""
    if k < 0:
        raise ValueError("k must be non-negative")

    def g(kk, nn):
        if kk == 0:
            return _pow2(count_atoms(sort, nn))
        return _pow2(_pow2(h(kk, nn)))

    def h(kk, nn):
        return 3 * g(kk - 1, nn + 1)

    return g(k, n), (h(k, n) if k > 0 else None)


# ---------------------------------------------------------------- QF small-model decision

def _partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def _qf_atoms(f) -> list:
    out = []

    def walk(g):
        if isinstance(g, (Eq, Rel)):
            if g not in out:
                out.append(g)
        elif isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (And, Or)):
            for h in g.args:
                walk(h)
        elif isinstance(g, (Exists, Forall)):
            raise FormulaError("quantified formula given to the quantifier-free decision procedure")
        elif isinstance(g, Prop):
            raise FormulaError("propositional variable in a first-order formula")
    walk(f)
    return out


def qf_counterexample(f, sort: Sort | None = None):
    """Return None if ``f`` holds in every structure under every assignment,
    else ``(structure, assignment)`` refuting it.

    Every refutation lives in a structure generated by the terms of ``f``, so
    it suffices to range over identifications of those terms and over the
    truth values of the relation atoms that occur.
    """
    atoms = _qf_atoms(f)
    vars_ = sorted(free_vars(f))
    consts = sorted(constants_of(f))
    T = [Var(v) for v in vars_] + [Const(c) for c in consts]
    rels = [a for a in atoms if isinstance(a, Rel)]
    for part in _partitions(T):
        block = {}
        for i, blk in enumerate(part):
            for t in blk:
                block[t] = i
        keys = []
        for r in rels:
            kk = (r.name, tuple(block[t] for t in r.args))
            if kk not in keys:
                keys.append(kk)
        for bits in itertools.product((False, True), repeat=len(keys)):
            truth = dict(zip(keys, bits))
            val = {}
            for a in atoms:
                if isinstance(a, Eq):
                    val[a] = block[a.left] == block[a.right]
                else:
                    val[a] = truth[(a.name, tuple(block[t] for t in a.args))]
            if not _bool_eval(f, val):
                return _witness(sort, part, block, truth, vars_, consts)
    return None


def _witness(sort, part, block, truth, vars_, consts):
    n = len(part)
    if sort is None:
        rels = {}
        for (r, args) in truth:
            rels[r] = len(args)
        sort = Sort.of(rels, consts)
    if sort.constants and n == 0:
        n = 1
    tt = {r: set() for r, _ in sort.relations}
    for (r, args), v in truth.items():
        if v and r in tt:
            tt[r].add(args)
    src = {}
    for c in sort.constants:
        src[c] = block.get(Const(c), 0)
    s = Structure(sort, n, tt, src)
    return s, {v: block[Var(v)] for v in vars_}


def qf_valid(f, sort: Sort | None = None) -> bool:
    return qf_counterexample(f, sort) is None


def qf_equivalent(f, g, sort: Sort | None = None, vars_=None) -> bool:
    if not (is_qf(f) and is_qf(g)):
        raise FormulaError("qf_equivalent expects quantifier-free formulas")
    if sort is not None or vars_ is not None:
        _check_symbols(f, sort, vars_)
        _check_symbols(g, sort, vars_)
    return qf_valid(iff(f, g), sort)


# ---------------------------------------------------------------- Hintikka types

class HintikkaType:
    """Depth-``d`` type of a structure with ``nparams`` distinguished elements.

    ``atoms`` is the set of true atoms over constants ``("c", name)`` and
    parameters ``("x", i)``; ``ext`` holds the depth ``d-1`` types of all
    one-element extensions of the parameter list.
    """

    __slots__ = ("sort", "depth", "nparams", "atoms", "ext", "_h")

    def __init__(self, sort: Sort, depth: int, nparams: int, atoms, ext=frozenset()):
        self.sort = sort
        self.depth = depth
        self.nparams = nparams
        self.atoms = frozenset(atoms)
        self.ext = frozenset(ext)
        self._h = hash((sort, depth, nparams, self.atoms, self.ext))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if not isinstance(other, HintikkaType):
            return NotImplemented
        return (self._h == other._h and self.depth == other.depth and self.nparams == other.nparams
                and self.sort == other.sort and self.atoms == other.atoms and self.ext == other.ext)

    def text(self) -> str:
        atoms = " ".join(sorted(_atom_text(a) for a in self.atoms))
        if self.depth == 0:
            return f"[{atoms}]"
        ext = " ".join(sorted(e.text() for e in self.ext))
        return f"[{atoms} | {ext}]"

    def __repr__(self):
        return f"HintikkaType(d={self.depth}, {self.text()})"


def _tterm(t) -> str:
    return t[1] if t[0] == "c" else f"#{t[1]}"


def _atom_text(a) -> str:
    return "(" + " ".join([a[0]] + [_tterm(t) for t in a[1:]]) + ")"


def _eq_atom(t1, t2):
    a, b = sorted((t1, t2))
    return ("=", a, b)


def _true_atoms(s: Structure, params: tuple) -> frozenset:
    T = [("c", c) for c in s.sort.constants] + [("x", i) for i in range(len(params))]
    val = {("c", c): s.sources[c] for c in s.sort.constants}
    for i, x in enumerate(params):
        val[("x", i)] = x
    out = set()
    for t1, t2 in itertools.combinations(T, 2):
        if val[t1] == val[t2]:
            out.add(_eq_atom(t1, t2))
    for r, ar in s.sort.relations:
        ts = s.tuples[r]
        if not ts:
            continue
        for args in itertools.product(T, repeat=ar):
            if tuple(val[t] for t in args) in ts:
                out.add((r,) + args)
    return frozenset(out)


def fo_theory(s: Structure, d: int, params: tuple = ()) -> HintikkaType:
    if d < 0:
        raise ValueError("depth must be non-negative")
    atoms = _true_atoms(s, tuple(params))
    if d == 0:
        return HintikkaType(s.sort, 0, len(params), atoms)
    ext = {fo_theory(s, d - 1, tuple(params) + (x,)) for x in range(s.size)}
    return HintikkaType(s.sort, d, len(params), atoms, ext)


@lru_cache(maxsize=None)
def theory_project(t: HintikkaType, d: int) -> HintikkaType:
    if d > t.depth:
        raise ValueError("cannot project to a larger depth")
    if d == t.depth:
        return t
    ext = frozenset(theory_project(e, d - 1) for e in t.ext) if d > 0 else frozenset()
    return HintikkaType(t.sort, d, t.nparams, t.atoms, ext)


def _remap_atoms(atoms, m):
    out = set()
    for a in atoms:
        ts = tuple(m.get(t, t) for t in a[1:])
        if a[0] == "=":
            out.add(_eq_atom(*ts))
        else:
            out.add((a[0],) + ts)
    return out


@lru_cache(maxsize=None)
def _combine(t1: HintikkaType, t2: HintikkaType, tags: tuple) -> HintikkaType:
    m1, m2 = {}, {}
    i1 = i2 = 0
    for g, side in enumerate(tags):
        if side == 0:
            m1[("x", i1)] = ("x", g)
            i1 += 1
        else:
            m2[("x", i2)] = ("x", g)
            i2 += 1
    atoms = _remap_atoms(t1.atoms, m1) | _remap_atoms(t2.atoms, m2)
    sort = t1.sort.union(t2.sort)
    d = t1.depth
    if d == 0:
        return HintikkaType(sort, 0, len(tags), atoms)
    ext = set()
    if t1.ext:
        p2 = theory_project(t2, d - 1)
        for e in t1.ext:
            ext.add(_combine(e, p2, tags + (0,)))
    if t2.ext:
        p1 = theory_project(t1, d - 1)
        for e in t2.ext:
            ext.add(_combine(p1, e, tags + (1,)))
    return HintikkaType(sort, d, len(tags), atoms, ext)


def theory_oplus(t1: HintikkaType, t2: HintikkaType) -> HintikkaType:
    if set(t1.sort.constants) & set(t2.sort.constants):
        raise SortError("constant sets of the two types overlap")
    if t1.depth != t2.depth:
        raise ValueError("types of different depth")
    if t1.nparams or t2.nparams:
        raise ValueError("theory_oplus expects parameter-free types")
    return _combine(t1, t2, ())


def _lookup_term(t, env):
    if isinstance(t, Var):
        if t.name not in env:
            raise FormulaError(f"unassigned variable {t.name}")
        return env[t.name]
    return ("c", t.name)


def _atoms_truth(f, atoms, env, sort: Sort | None = None) -> bool:
    """Evaluate a quantifier-free formula against a set of true atoms."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Eq):
        a, b = _lookup_term(f.left, env), _lookup_term(f.right, env)
        return a == b or _eq_atom(a, b) in atoms
    if isinstance(f, Rel):
        if sort is not None and not sort.has_rel(f.name):
            raise FormulaError(f"unknown relation {f.name}")
        return (f.name,) + tuple(_lookup_term(t, env) for t in f.args) in atoms
    if isinstance(f, Not):
        return not _atoms_truth(f.arg, atoms, env, sort)
    if isinstance(f, And):
        return all(_atoms_truth(g, atoms, env, sort) for g in f.args)
    if isinstance(f, Or):
        return any(_atoms_truth(g, atoms, env, sort) for g in f.args)
    raise FormulaError(f"unexpected node {f!r}")


def type_satisfies(t: HintikkaType, f, env: Mapping | None = None) -> bool:
    """Decide ``f`` from the type alone; needs ``qdepth(f) <= t.depth``."""
    env = dict(env or {})
    for c in constants_of(f):
        if c not in t.sort.constants:
            raise FormulaError(f"unknown constant {c}")
    if qdepth(f) > t.depth:
        raise ValueError(f"formula depth {qdepth(f)} exceeds type depth {t.depth}")
    return _tsat(t, f, env)


def _tsat(t, f, env):
    if isinstance(f, (Exists, Forall)):
        env2 = dict(env)
        env2[f.var] = ("x", t.nparams)
        want = isinstance(f, Exists)
        for e in t.ext:
            if _tsat(e, f.body, env2) == want:
                return want
        return not want
    if isinstance(f, Not):
        return not _tsat(t, f.arg, env)
    if isinstance(f, And):
        return all(_tsat(t, g, env) for g in f.args)
    if isinstance(f, Or):
        return any(_tsat(t, g, env) for g in f.args)
    return _atoms_truth(f, t.atoms, env, t.sort)


# ---------------------------------------------------------------- translation through schemes

def scheme_var(i: int) -> str:
    return f"x{i}"


def backward_translate(sch, f):
    """Formula over the scheme's input sort equivalent to ``f`` on the output."""
    out_consts = sorted(constants_of(f))
    for c in out_consts:
        if c not in sch.out_sort.constants:
            raise FormulaError(f"constant {c} not in output sort")
    C = sch.in_sort.constants
    parts = []
    for h in itertools.product(C, repeat=len(out_consts)):
        cmap = dict(zip(out_consts, h))
        guard = conj(*(sch.kappa_of(cmap[d], d) for d in out_consts))
        if guard == FALSE:
            continue
        parts.append(conj(guard, _translate(sch, f, cmap)))
    return disj(*parts)


def _translate(sch, f, cmap):
    def tm(t):
        return Const(cmap[t.name]) if isinstance(t, Const) else t
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Eq):
        return Eq(tm(f.left), tm(f.right))
    if isinstance(f, Rel):
        if f.name not in sch.phi:
            raise FormulaError(f"output relation {f.name} has no defining formula")
        m = {scheme_var(i + 1): tm(a) for i, a in enumerate(f.args)}
        return substitute(sch.phi[f.name], m)
    if isinstance(f, Not):
        return Not(_translate(sch, f.arg, cmap))
    if isinstance(f, And):
        return And(tuple(_translate(sch, a, cmap) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_translate(sch, a, cmap) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        dv = substitute(sch.delta, {scheme_var(1): Var(f.var)})
        body = _translate(sch, f.body, cmap)
        if isinstance(f, Exists):
            return Exists(f.var, conj(dv, body))
        return Forall(f.var, disj(neg(dv), body))
    raise FormulaError(f"unexpected node {f!r}")


def theory_qfd(sch, t: HintikkaType, d: int) -> HintikkaType:
    """Depth-``d`` type of ``g(S)`` computed from the type of ``S``."""
    if t.sort != sch.in_sort:
        raise SortError(f"type of sort {t.sort} given to a scheme on {sch.in_sort}")
    if t.depth < d:
        raise ValueError("input type is too shallow")
    if t.nparams:
        raise ValueError("theory_qfd expects a parameter-free type")
    t = theory_project(t, d)
    srcmap = {}
    for dd in sch.out_sort.constants:
        hits = [c for c in sch.in_sort.constants if _atoms_truth(sch.kappa_of(c, dd), t.atoms, {})]
        if not hits:
            raise SortError(f"no source for {dd}: scheme invalid on this type")
        srcmap[dd] = ("c", hits[0])
    return _qfd_type(sch, t, tuple(sorted(srcmap.items())))


@lru_cache(maxsize=None)
def _qfd_type_cached(sch, t, srcmap):
    return _qfd_type_raw(sch, t, srcmap)


def _qfd_type(sch, t, srcmap):
    return _qfd_type_cached(sch, t, srcmap)


def _qfd_type_raw(sch, t, srcmap):
    k = t.nparams
    src = dict(srcmap)
    out_terms = [("c", c) for c in sch.out_sort.constants] + [("x", i) for i in range(k)]

    def inp(term):
        return src[term[1]] if term[0] == "c" else term

    env_terms = {}
    atoms = set()
    for t1, t2 in itertools.combinations(out_terms, 2):
        a, b = inp(t1), inp(t2)
        if a == b or _eq_atom(a, b) in t.atoms:
            atoms.add(_eq_atom(t1, t2))
    for r, ar in sch.out_sort.relations:
        phi = sch.phi[r]
        for args in itertools.product(out_terms, repeat=ar):
            env = {scheme_var(i + 1): inp(a) for i, a in enumerate(args)}
            if _atoms_truth(phi, t.atoms, env):
                atoms.add((r,) + args)
    if t.depth == 0:
        return HintikkaType(sch.out_sort, 0, k, atoms)
    ext = set()
    for e in t.ext:
        if _atoms_truth(sch.delta, e.atoms, {scheme_var(1): ("x", k)}):
            ext.add(_qfd_type(sch, e, srcmap))
    return HintikkaType(sch.out_sort, t.depth, k, atoms, ext)


# ---------------------------------------------------------------- compiled evaluation

def compile_formula(f, params):
    """Compile ``f`` into ``fn(structure, *values)``; ``params`` names the free variables."""
    names = {}
    counter = itertools.count()

    def ident(v, env):
        if v not in env:
            raise FormulaError(f"unassigned variable {v}")
        return env[v]

    def term(t, env):
        if isinstance(t, Var):
            return ident(t.name, env)
        return f"S[{t.name!r}]"

    def go(g, env):
        if isinstance(g, Top):
            return "True"
        if isinstance(g, Bot):
            return "False"
        if isinstance(g, Eq):
            return f"({term(g.left, env)} == {term(g.right, env)})"
        if isinstance(g, Rel):
            args = ", ".join(term(t, env) for t in g.args)
            if g.name not in names:
                names[g.name] = f"R{len(names)}"
            return f"(({args},) in {names[g.name]})"
        if isinstance(g, Not):
            return f"(not {go(g.arg, env)})"
        if isinstance(g, And):
            return "(" + " and ".join(go(a, env) for a in g.args) + ")"
        if isinstance(g, Or):
            return "(" + " or ".join(go(a, env) for a in g.args) + ")"
        if isinstance(g, (Exists, Forall)):
            v = f"q{next(counter)}"
            env2 = dict(env)
            env2[g.var] = v
            body = go(g.body, env2)
            fn = "any" if isinstance(g, Exists) else "all"
            return f"{fn}({body} for {v} in D)"
        raise FormulaError(f"cannot compile {g!r}")

    env = {p: f"p{i}" for i, p in enumerate(params)}
    body = go(f, env)
    loads = "".join(f"    {nm} = s.tuples[{r!r}]\n" for r, nm in names.items())
    src = (f"def _f(s, {', '.join(env.values())}):\n"
           f"    S = s.sources\n    D = range(s.size)\n{loads}    return {body}\n")
    scope = {}
    exec(src, scope)
    return scope["_f"]
