from __future__ import annotations

import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from graft import logic as L
from graft import structures as st
from graft.expansions import (LARGE, SMALL, VOID, classify_ports, decide_sim, enumerate_expansions,
                              in_label, is_expansion, out_label, s_label)
from graft.structures import SortError

from helpers import expansion_oracle, random_port_graph

seeds = hs.integers(0, 2**32 - 1)

# label a source graph by its type
TYPE_EV = SimpleNamespace(label=lambda x: st.compute_type(x).canonical())


def test_classify_ports():
    g = st.make_graph(5, [(0, 1)], ports={"p": [0, 1, 2, 3], "q": [], "r": [4, 0]})
    assert classify_ports(g, 2) == {"p": (LARGE, 4), "q": (VOID, 0), "r": (SMALL, 2)}
    assert classify_ports(g, 4)["p"] == (SMALL, 4)
    assert classify_ports(g, 1)["r"] == (LARGE, 2)
    with pytest.raises(ValueError):
        classify_ports(g, 0)


def test_small_and_large_counts_by_hand():
    one = st.make_graph(1, ports={"p": [0]})
    exps, flag = enumerate_expansions(one, 1)
    assert not flag and len(exps) == 1
    assert exps[0].graph.sources == {s_label("p", 1): 0}
    # two port vertices at m=1: optional in- and out-auxiliary
    two = st.make_graph(2, ports={"p": [0, 1]})
    exps, _ = enumerate_expansions(two, 1)
    assert len(exps) == 4
    assert sorted(len(e.aux()) for e in exps) == [0, 1, 1, 2]


def test_small_port_labels_are_distinct():
    g = st.make_graph(2, [(0, 1)], ports={"p": [0, 1]})
    exps, _ = enumerate_expansions(g, 2)
    for e in exps:
        assert sorted(e.graph.sources) == [s_label("p", 1), s_label("p", 2)]
        assert sorted(e.graph.sources.values()) == [0, 1]
    # the edge tells the two assignments apart
    assert len(exps) == 2


def test_expansions_rejects_sources():
    g = st.make_graph(2, sources={"a": 0}, ports={"p": [1]})
    with pytest.raises(SortError):
        enumerate_expansions(g, 1)


def test_forbidden_flag():
    k = st.bicomplete_graph(3)
    g = st.make_graph(k.size, k.edges, ports={"p": [0]})
    assert enumerate_expansions(g, 2) == ([], True)
    assert enumerate_expansions(g, 3)[1] is False


def test_is_expansion_negatives():
    g = st.make_graph(3, [(0, 1)], ports={"p": [0, 1, 2], "q": [2]})
    ok = st.make_graph(4, [(0, 1), (0, 3), (1, 3), (2, 3)], sources={in_label("p", 1): 3, s_label("q", 1): 2})
    assert is_expansion(g, ok, 2)
    # a port left on the result
    assert not is_expansion(g, st.make_graph(3, [(0, 1)], ports={"p": [0]}), 2)
    # extra edge
    assert not is_expansion(g, st.make_graph(4, list(ok.edges) + [(2, 0)], sources=ok.sources), 2)
    # missing edge to the auxiliary
    assert not is_expansion(g, st.make_graph(4, [(0, 1), (0, 3), (1, 3)], sources=ok.sources), 2)
    # small port label on a vertex outside the port
    bad = dict(ok.sources)
    bad[s_label("q", 1)] = 0
    assert not is_expansion(g, st.make_graph(4, ok.edges, sources=bad), 2)
    # index out of range
    bad = {in_label("p", 3): 3, s_label("q", 1): 2}
    assert not is_expansion(g, st.make_graph(4, ok.edges, sources=bad), 2)
    # small port vertex without its label
    assert not is_expansion(g, st.make_graph(4, ok.edges, sources={in_label("p", 1): 3}), 2)
    # an auxiliary vertex without a label
    assert not is_expansion(g, st.make_graph(5, ok.edges, sources=ok.sources), 2)
    # out-auxiliary for a small port
    bad = {in_label("p", 1): 3, s_label("q", 1): 2, out_label("q", 1): 4}
    assert not is_expansion(g, st.make_graph(5, list(ok.edges) + [(4, 2)], sources=bad), 2)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_expansions_are_distinct_and_valid(seed):
    rng = random.Random(seed)
    g = random_port_graph(rng, rng.randint(1, 5), density=0.3, port_density=0.4)
    m = rng.randint(1, 2)
    exps, flag = enumerate_expansions(g, m)
    if flag:
        assert exps == []
        return
    keys = [e.graph.canonical() for e in exps]
    assert len(keys) == len(set(keys))
    base = st.make_graph(g.size, g.edges)
    for e in exps:
        assert is_expansion(g, e.graph, m)
        assert e.graph.induced(range(g.size), st.graph_sort()) == base
        assert e.base_size == g.size


def test_expansion_count_matches_generate_and_filter():
    rng = random.Random(31)
    for _ in range(12):
        g = random_port_graph(rng, rng.randint(1, 4), ports=("p",), density=0.3, port_density=0.5)
        exps, flag = enumerate_expansions(g, 1)
        if not flag:
            assert len(exps) == expansion_oracle(g, 1)


def test_enumerate_respects_cap():
    g = st.make_graph(6, ports={"p": []})
    with pytest.raises(st.CapacityError):
        enumerate_expansions(g, 1, cap=5)


# ---------------------------------------------------------------- equivalence


def _small_port_graphs(seed, count):
    rng = random.Random(seed)
    return [random_port_graph(rng, rng.randint(1, 3), ports=("p",), density=0.4, port_density=0.5)
            for _ in range(count)]


def test_decide_sim_reflexive_and_symmetric():
    gs = _small_port_graphs(40, 10)
    for g in gs:
        assert decide_sim(g, g, 1, TYPE_EV, depth=2)
        iso = g.relabel(list(reversed(range(g.size))))
        assert decide_sim(g, iso, 1, TYPE_EV, depth=2)
    for g in gs[:6]:
        for h in gs[:6]:
            assert decide_sim(g, h, 1, TYPE_EV, depth=2) == decide_sim(h, g, 1, TYPE_EV, depth=2)


def test_decide_sim_forbidden_graphs():
    k = st.bicomplete_graph(3)
    g = st.make_graph(k.size, k.edges, ports={"p": [0]})
    h = st.make_graph(k.size + 1, k.edges, ports={"p": [6]})
    plain = st.make_graph(2, [(0, 1)], ports={"p": [0]})
    assert decide_sim(g, h, 2, TYPE_EV, depth=1)
    assert not decide_sim(g, plain, 2, TYPE_EV, depth=1)
    assert not decide_sim(plain, g, 2, TYPE_EV, depth=1)
    with pytest.raises(SortError):
        decide_sim(plain, st.make_graph(2, [(0, 1)], ports={"q": [0]}), 2, TYPE_EV)


def test_decide_sim_without_ports():
    # with no ports the only expansion is the graph itself
    rng = random.Random(41)
    gs = [st.make_graph(n, [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < 0.4],
                        ports={"p": []}) for n in rng.choices(range(1, 4), k=12)]
    for g in gs:
        for h in gs:
            direct = L.fo_theory(g, 2) == L.fo_theory(h, 2) and \
                TYPE_EV.label(st.make_graph(g.size, g.edges)) == TYPE_EV.label(st.make_graph(h.size, h.edges))
            assert decide_sim(g, h, 1, TYPE_EV, depth=2) == direct


def test_equal_theories_give_equal_port_kinds():
    m = 1
    rng = random.Random(42)
    gs = [random_port_graph(rng, rng.randint(1, 4), density=0.3, port_density=0.5) for _ in range(40)]
    by_theory = {}
    for g in gs:
        by_theory.setdefault(L.fo_theory(g, m + 1), []).append(g)
    for group in by_theory.values():
        kinds = {tuple((p, k) for p, (k, _) in sorted(classify_ports(g, m).items())) for g in group}
        assert len(kinds) == 1
