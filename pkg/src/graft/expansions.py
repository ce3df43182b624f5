"""Port statistics, expansions of port graphs into source graphs, and the
pointwise decision of the expansion-based equivalence."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import structures as st
from .structures import EDGE, SortError, Structure, check_cap, graph_sort


VOID, SMALL, LARGE = "void", "small", "large"


def classify_ports(g: Structure, m: int) -> dict:
    """port label -> (void|small|large, count)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    out = {}
    for p in g.sort.ports:
        n = len(g.port_set(p))
        out[p] = (VOID if n == 0 else SMALL if n <= m else LARGE, n)
    return out


def in_label(p, i):
    return f"in({p},{i})"


def out_label(p, i):
    return f"out({p},{i})"


def s_label(p, i):
    return f"s({p},{i})"


@dataclass(frozen=True)
class Expansion:
    graph: Structure      # source graph; vertices below base_size are those of the base graph
    base_size: int

    def aux(self) -> dict:
        return {c: v for c, v in self.graph.sources.items() if v >= self.base_size}


def _check(g: Structure):
    if not g.sort.has_rel(EDGE) or not g.sort.is_graph() or g.sort.constants:
        raise SortError("expansions are defined for graphs with ports and no sources")


def _build(g: Structure, small_assign: dict, large_aux: dict) -> Structure:
    """small_assign: label -> vertex; large_aux: p -> (in indices, out indices)."""
    n = g.size
    edges = set(g.edges)
    sources = dict(small_assign)
    k = n
    for p in sorted(large_aux):
        ins, outs = large_aux[p]
        ports = g.port_set(p)
        for i in ins:
            sources[in_label(p, i)] = k
            edges |= {(x, k) for x in ports}
            k += 1
        for i in outs:
            sources[out_label(p, i)] = k
            edges |= {(k, x) for x in ports}
            k += 1
    return st.make_graph(k, edges, sources=sources)


def enumerate_expansions(g: Structure, m: int, cap: int | None = None):
    """``(expansions, has_forbidden)``: all expansions up to isomorphism, or an
    empty list with the flag set when ``g`` itself contains the forbidden
    complete bipartite digraph."""
    _check(g)
    check_cap(g.size, cap, "enumerate_expansions")
    if st.has_bicomplete(st.mdf(g, []), m + 1, directed=True):
        return [], True
    stats = classify_ports(g, m)
    small_choices, large = [], []
    for p in sorted(stats):
        kind, cnt = stats[p]
        if kind == SMALL:
            ports = sorted(g.port_set(p))
            opts = []
            for idx in itertools.permutations(range(1, m + 1), cnt):
                opts.append({s_label(p, i): v for i, v in zip(idx, ports)})
            small_choices.append(opts)
        elif kind == LARGE:
            large.append(p)
    # auxiliaries of one kind are interchangeable, so indices run 1..k
    index_sets = [tuple(range(1, k + 1)) for k in range(m + 1)]
    seen, out = set(), []
    for combo in itertools.product(*small_choices):
        assign = {}
        for part in combo:
            assign.update(part)
        for aux in itertools.product(itertools.product(index_sets, repeat=2), repeat=len(large)):
            h = _build(g, assign, dict(zip(large, aux)))
            if st.has_bicomplete(h, m + 1, directed=True):
                continue
            key = h.canonical()
            if key not in seen:
                seen.add(key)
                out.append(Expansion(h, g.size))
    return out, False


def is_expansion(g: Structure, h: Structure, m: int) -> bool:
    """Direct check of the defining conditions, with ``h``'s first ``g.size``
    vertices taken as those of ``g``."""
    n = g.size
    if h.size < n or h.sort.ports:
        return False
    if st.has_bicomplete(h, m + 1, directed=True):
        return False
    stats = classify_ports(g, m)
    new = set(range(n, h.size))
    covered = set()
    expected = set(g.edges)
    for c, v in h.sources.items():
        kind, p, i = _parse_label(c)
        if p not in stats or not 1 <= i <= m:
            return False
        status = stats[p][0]
        if kind == "s":
            if status != SMALL or v in new or v not in g.port_set(p):
                return False
        else:
            if status != LARGE or v not in new:
                return False
            ports = g.port_set(p)
            expected |= {(x, v) for x in ports} if kind == "in" else {(v, x) for x in ports}
        covered.add(v)
    # every new vertex carries exactly one label; each small port exactly one of its labels
    for v in new:
        if sum(1 for w in h.sources.values() if w == v) != 1:
            return False
    for p, (status, _) in stats.items():
        if status == SMALL:
            for x in g.port_set(p):
                labs = [c for c, v in h.sources.items() if v == x and _parse_label(c)[1] == p]
                if len(labs) != 1:
                    return False
    return set(h.edges) == expected


def _parse_label(c: str):
    kind, _, rest = c.partition("(")
    p, _, i = rest.rstrip(")").rpartition(",")
    if kind not in ("in", "out", "s") or not p or not i.isdigit():
        return ("?", None, 0)
    return kind, p, int(i)


def sim_key(x: Structure, ev, depth: int):
    from .logic import fo_theory
    return (ev.label(x), fo_theory(x, depth))


def decide_sim(g: Structure, g2: Structure, m: int, ev, depth: int | None = None) -> bool:
    """Both contain the forbidden bicomplete digraph, or neither does and they
    have equal theories at ``depth`` (default 2m+2) and expansions that match
    under (evaluator label, theory) in both directions."""
    from .logic import fo_theory
    _check(g)
    _check(g2)
    if g.sort != g2.sort:
        raise SortError("decide_sim compares graphs of the same sort")
    if depth is None:
        depth = 2 * m + 2
    k1 = st.has_bicomplete(st.mdf(g, []), m + 1, directed=True)
    k2 = st.has_bicomplete(st.mdf(g2, []), m + 1, directed=True)
    if k1 or k2:
        return k1 and k2
    if fo_theory(g, depth) != fo_theory(g2, depth):
        return False
    e1, _ = enumerate_expansions(g, m)
    e2, _ = enumerate_expansions(g2, m)
    keys1 = {sim_key(e.graph, ev, depth) for e in e1}
    keys2 = {sim_key(e.graph, ev, depth) for e in e2}
    return keys1 == keys2
