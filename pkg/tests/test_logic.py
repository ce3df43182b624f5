from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from graft import logic as L
from graft import qfd
from graft import structures as st
from graft.logic import Const, Eq, Exists, Forall, FormulaError, Rel, Var
from graft.structures import Sort

from helpers import bool_table, random_structure

seeds = hs.integers(min_value=0, max_value=2**32 - 1)
P = L.parse_formula


def random_fo(rng, sort, free, depth, size=3):
    """Random formula with quantifier depth at most ``depth`` and at most
    ``size`` Boolean connectives above each quantifier-free leaf."""
    if depth == 0 or size == 0 or rng.random() < 0.25:
        return qfd.random_qf(rng, sort, free, rng.randint(0, 2))
    k = rng.random()
    if k < 0.45:
        v = rng.choice(["x1", "x2", "y", "z"])
        body = random_fo(rng, sort, sorted(set(free) | {v}), depth - 1, size)
        return Exists(v, body) if rng.random() < 0.5 else Forall(v, body)
    if k < 0.6:
        return L.neg(random_fo(rng, sort, free, depth, size - 1))
    a = random_fo(rng, sort, free, depth, size - 1)
    b = random_fo(rng, sort, free, depth, size - 1)
    return L.conj(a, b) if k < 0.8 else L.disj(a, b)


def all_assignments(s, names):
    for vals in itertools.product(range(s.size), repeat=len(names)):
        yield dict(zip(names, vals))


# ---------------------------------------------------------------- parse, print, eval

def test_parse_print_round_trip():
    for text in ["true", "(rel edge x (const a))", "(exists x1 (forall y (or (eq x1 y) (not (rel edge x1 y)))))"]:
        f = P(text)
        assert L.to_sexpr(f) == text
        assert P(L.to_sexpr(f)) == f


def test_parse_errors():
    from graft.sexpr import SexprError
    for bad in ["(eq x)", "(frob x)", "(exists (x) true)", "(rel)", "("]:
        with pytest.raises(SexprError):
            P(bad)


def test_eval_examples():
    g1 = st.make_graph(1)
    g2 = st.make_graph(2)
    ab = st.make_graph(2, [(0, 1)], sources={"a": 0, "b": 1})
    assert L.eval_formula(g1, L.TRUE)
    assert L.eval_formula(ab, P("(rel edge (const a) (const b))"))
    f = P("(exists x (forall y (eq x y)))")
    assert L.eval_formula(g1, f)
    assert not L.eval_formula(g2, f)


def test_eval_errors():
    g = st.make_graph(2)
    with pytest.raises(FormulaError):
        L.eval_formula(g, P("(rel edge x y)"), {"x": 0})
    with pytest.raises(FormulaError):
        L.eval_formula(g, P("(exists x (rel foo x))"))


def test_qdepth_and_size():
    f = P("(and (exists x (forall y (eq x y))) (exists z true))")
    assert L.qdepth(f) == 2
    assert not L.is_qf(f)
    assert L.free_vars(P("(exists x (rel edge x y))")) == {"y"}


# ---------------------------------------------------------------- Boolean normal form

def _bool_formulas(names, max_size):
    """Every formula over ``names`` up to ``max_size`` nodes, modulo commutation."""
    by = {1: [L.Prop(n) for n in names] + [L.TRUE, L.FALSE]}
    for k in range(2, max_size + 1):
        out = [L.Not(f) for f in by[k - 1]]
        for i in range(1, k - 1):
            j = k - 1 - i
            if i > j:
                break
            for a in by[i]:
                for b in by[j]:
                    out.append(L.And((a, b)))
                    out.append(L.Or((a, b)))
        by[k] = out
    return [f for fs in by.values() for f in fs]


def test_normalize_bool_examples():
    assert L.normalize_bool(P("(or p1 (not p1))")) == L.TRUE
    a = L.normalize_bool(P("(not (and p1 p2))"))
    b = L.normalize_bool(P("(or (not p1) (not p2))"))
    assert a == b
    assert bool_table(a, ["p1", "p2"]) == (True, True, True, False)


def test_normalize_bool_sound_idempotent_and_canonical():
    names = ["p1", "p2", "p3"]
    by_table = {}
    for f in _bool_formulas(names, 6):
        n = L.normalize_bool(f)
        assert bool_table(n, names) == bool_table(f, names)
        assert L.normalize_bool(n) == n
        prev = by_table.setdefault(bool_table(f, names), n)
        assert prev == n


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_normalize_bool_random_four_variables(seed):
    rng = random.Random(seed)
    names = ["p1", "p2", "p3", "p4"]

    def rnd(d):
        if d == 0 or rng.random() < 0.25:
            return L.Prop(rng.choice(names))
        k = rng.random()
        if k < 0.3:
            return L.Not(rnd(d - 1))
        return (L.And if k < 0.65 else L.Or)((rnd(d - 1), rnd(d - 1)))
    f = rnd(5)
    n = L.normalize_bool(f)
    assert bool_table(n, names) == bool_table(f, names)
    assert L.normalize_bool(n) == n


def test_four_forms_for_one_variable():
    forms = {L.normalize_bool(f) for f in _bool_formulas(["p1"], 5)}
    assert len(forms) == 4


# ---------------------------------------------------------------- QF and FO reduction

def test_normalize_qf_examples():
    assert L.normalize_qf(P("(eq (const a) (const a))")) == L.TRUE
    f = L.normalize_qf(P("(or (rel edge x y) (rel edge x y))"))
    assert f == P("(rel edge x y)")
    assert L.normalize_qf(P("(eq y x)")) == L.normalize_qf(P("(eq x y)"))
    with pytest.raises(FormulaError):
        L.normalize_qf(P("(exists x true)"))
    with pytest.raises(FormulaError):
        L.normalize_qf(P("(rel foo x)"), Sort.of({"edge": 2}), ["x"])


def test_normalize_fo_examples():
    f = L.normalize_fo(P("(exists z (rel edge z z))"), 1)
    assert f == P("(exists x1 (rel edge x1 x1))")
    g = L.normalize_fo(P("(and (exists x (rel edge x x)) (exists y (rel edge y y)))"), 1)
    assert g == f
    with pytest.raises(FormulaError):
        L.normalize_fo(P("(exists x (exists y true))"), 1)


SMALL_SORTS = [Sort.of({"edge": 2}, []), Sort.of({"edge": 2}, ["a"]), Sort.of({"p": 1}, ["a", "b"])]


def _small_structures(sort):
    return list(st.enumerate_structures(sort, 3 if len(sort.constants) < 2 else 2, up_to_iso=True))


@pytest.mark.parametrize("sort", SMALL_SORTS, ids=str)
def test_normalisation_preserves_verdicts(sort):
    rng = random.Random(5)
    structs = _small_structures(sort)
    free = ["x1", "x2"]
    for _ in range(40):
        f = qfd.random_qf(rng, sort, free, 3)
        nf = L.normalize_qf(f, sort, free)
        g = random_fo(rng, sort, free, 2)
        ng = L.normalize_fo(g, 2)
        for s in structs:
            for a in all_assignments(s, free):
                assert L.eval_formula(s, f, a) == L.eval_formula(s, nf, a)
                assert L.eval_formula(s, g, a) == L.eval_formula(s, ng, a)


def test_atom_counts():
    assert L.count_atoms(Sort.of({"edge": 2}, ["a", "b"]), 0) == 8
    assert L.count_atoms(Sort.of({}, []), 1) == 1
    for rels in [{}, {"r": 1}, {"r": 3}, {"r": 2, "s": 1}]:
        for c in range(3):
            for n in range(3):
                sort = Sort.of(rels, [f"c{i}" for i in range(c)])
                names = [f"x{i + 1}" for i in range(n)]
                assert L.count_atoms(sort, n) == len(L.generate_atoms(sort, names))
                assert L.count_atoms(sort, n, True) == len(set(L.generate_atoms(sort, names, True)))


def test_reduced_bounds():
    sort = Sort.of({"edge": 2}, ["a"])
    g0, _ = L.reduced_count_bounds(sort, 1, 0)
    assert g0 == 2 ** L.count_atoms(sort, 1)
    small = Sort.of({}, [])
    seq = [L.reduced_count_bounds(small, 0, k)[0] for k in range(2)]
    assert seq == sorted(seq) and seq[1] == 2 ** 2 ** 6
    with pytest.raises(st.CapacityError):
        L.reduced_count_bounds(sort, 1, 2)
    with pytest.raises(ValueError):
        L.reduced_count_bounds(sort, 1, -1)


def test_reduced_forms_stay_within_bound():
    sort = Sort.of({}, [])
    rng = random.Random(3)
    seen = set()
    for _ in range(300):
        seen.add(L.normalize_fo(random_fo(rng, sort, ["x1"], 0, 3), 0))
    assert len(seen) <= L.reduced_count_bounds(sort, 1, 0)[0]


# ---------------------------------------------------------------- QF equivalence

def test_qf_equivalent_examples():
    assert L.qf_equivalent(P("(eq x y)"), P("(eq y x)"))
    assert not L.qf_equivalent(P("(rel edge x y)"), P("(rel edge y x)"))
    cex = L.qf_counterexample(L.iff(P("(rel edge x y)"), P("(rel edge y x)")))
    s, a = cex
    f = L.iff(P("(rel edge x y)"), P("(rel edge y x)"))
    assert not L.eval_formula(s, f, a)


def test_qf_equivalent_matches_over_enumeration():
    sort = Sort.of({"edge": 2}, ["a"])
    free = ["x1", "x2"]
    rng = random.Random(9)
    # the decision bound is |vars| + |constants| = 3; enumerate one element further
    structs = list(st.enumerate_structures(sort, 3, up_to_iso=True))
    assert structs
    for _ in range(40):
        f = qfd.random_qf(rng, sort, free, 2)
        g = L.normalize_qf(qfd.random_qf(rng, sort, free, 2)) if rng.random() < 0.5 else L.normalize_qf(f)
        truth = all(L.eval_formula(s, f, a) == L.eval_formula(s, g, a)
                    for s in structs for a in all_assignments(s, free))
        assert L.qf_equivalent(f, g, sort) == truth


# ---------------------------------------------------------------- Hintikka types

@settings(max_examples=40, deadline=None)
@given(seeds)
def test_fo_theory_respects_isomorphism_and_projection(seed):
    rng = random.Random(seed)
    s = random_structure(rng, Sort.of({"edge": 2}, ["a"]), 4)
    order = list(range(s.size))
    rng.shuffle(order)
    t2 = L.fo_theory(s, 2)
    assert t2 == L.fo_theory(s.relabel(order), 2)
    assert L.theory_project(t2, 1) == L.fo_theory(s, 1)
    assert L.theory_project(t2, 0) == L.fo_theory(s, 0)


def test_fo_theory_examples():
    e1, e2, e3 = st.make_graph(1), st.make_graph(2), st.make_graph(3)
    assert L.fo_theory(e1, 2) != L.fo_theory(e2, 2)
    assert L.fo_theory(e2, 2) == L.fo_theory(e3, 2)


def test_types_decide_sentences():
    rng = random.Random(4)
    sort = Sort.of({"edge": 2}, ["a"])
    structs = list(st.enumerate_structures(sort, 2, up_to_iso=True))
    for _ in range(60):
        f = random_fo(rng, sort, [], 2)
        for s in structs:
            assert L.type_satisfies(L.fo_theory(s, 2), f) == L.eval_formula(s, f)


def test_equal_types_agree_on_sentences():
    rng = random.Random(6)
    sort = Sort.of({"edge": 2}, [])
    structs = list(st.enumerate_structures(sort, 3, up_to_iso=True))
    sentences = [random_fo(rng, sort, [], 2) for _ in range(60)]
    groups = {}
    for s in structs:
        groups.setdefault(L.fo_theory(s, 2), []).append(s)
    for members in groups.values():
        for f in sentences:
            assert len({L.eval_formula(s, f) for s in members}) == 1


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_theory_oplus_commutes_with_fo_theory(seed):
    rng = random.Random(seed)
    a = random_structure(rng, Sort.of({"edge": 2}, ["a"]), 3)
    b = random_structure(rng, Sort.of({"edge": 2}, ["b"]), 3)
    for d in (1, 2):
        assert L.theory_oplus(L.fo_theory(a, d), L.fo_theory(b, d)) == L.fo_theory(st.oplus(a, b), d)


def test_theory_oplus_with_empty_structure():
    s = st.make_graph(2, [(0, 1)])
    t = L.fo_theory(s, 2)
    assert L.theory_oplus(t, L.fo_theory(st.empty(s.sort), 2)) == t


def test_theory_oplus_symmetric():
    a = st.make_graph(2, [(0, 1)], sources={"a": 0})
    b = st.make_graph(1, [(0, 0)], sources={"b": 0})
    ta, tb = L.fo_theory(a, 2), L.fo_theory(b, 2)
    assert L.theory_oplus(ta, tb) == L.theory_oplus(tb, ta)


# ---------------------------------------------------------------- translation through schemes

def _schemes(sort):
    out = [qfd.identity_scheme(sort), qfd.builtin("fus", ("a", "b"), sort),
           qfd.builtin("srcfg", ("a",), sort), qfd.builtin("srcren", ("a", "c"), sort)]
    rng = random.Random(2)
    out += [qfd.random_scheme(rng, sort) for _ in range(4)]
    return out


def test_backward_translation_examples():
    sort = Sort.of({"edge": 2}, ["a", "b"])
    sch = qfd.builtin("fus", ("a", "b"), sort)
    tr = L.backward_translate(sch, L.TRUE)
    assert L.qf_valid(tr)
    ex = L.backward_translate(sch, P("(exists x1 true)"))
    assert isinstance(ex, Exists)


def test_backward_translation_dual_evaluation():
    sort = Sort.of({"edge": 2}, ["a", "b"])
    rng = random.Random(8)
    structs = list(st.enumerate_structures(sort, 3, up_to_iso=True))[::7]
    for sch in _schemes(sort):
        for _ in range(8):
            f = random_fo(rng, sch.out_sort, [], 2)
            tr = L.backward_translate(sch, f)
            assert L.qdepth(tr) == L.qdepth(f)
            for s in structs:
                assert L.eval_formula(s, tr) == L.eval_formula(qfd.apply_scheme(sch, s), f)


def test_theory_qfd_dual_evaluation():
    sort = Sort.of({"edge": 2}, ["a", "b"])
    structs = list(st.enumerate_structures(sort, 3, up_to_iso=True))[::5]
    for sch in _schemes(sort):
        for s in structs:
            lhs = L.theory_qfd(sch, L.fo_theory(s, 2), 2)
            assert lhs == L.fo_theory(qfd.apply_scheme(sch, s), 2)


def test_theory_of_relation_free_image():
    sort = Sort.of({"edge": 2}, [])
    forget = qfd.QfdScheme(sort, Sort.of({}, []), L.TRUE, {}, {}, "forget")
    for n in range(1, 5):
        t = L.theory_qfd(forget, L.fo_theory(st.make_graph(n, [(0, 0)]), 2), 2)
        assert t == L.fo_theory(st.Structure(Sort.of({}, []), n), 2)


def test_compiled_formula_matches_interpreter():
    rng = random.Random(12)
    sort = Sort.of({"edge": 2}, ["a"])
    structs = list(st.enumerate_structures(sort, 3, up_to_iso=True))[::3]
    for _ in range(40):
        f = random_fo(rng, sort, ["x1"], 2)
        fn = L.compile_formula(f, ["x1"])
        for s in structs:
            for x in range(s.size):
                assert fn(s, x) == L.eval_formula(s, f, {"x1": x})
