"""Shared generators and brute-force oracles for the test-suite."""
from __future__ import annotations

import itertools
import random

from graft import structures as st
from graft.structures import EDGE, MultiGraph, Sort, Structure
from graft.terms import Term, eval_term, m_parallel


# ---------------------------------------------------------------- random data

def random_structure(rng: random.Random, sort: Sort, max_size: int, density: float = 0.35) -> Structure:
    lo = 1 if sort.constants else 0
    n = rng.randint(lo, max_size)
    tt = {}
    for r, ar in sort.relations:
        tt[r] = {args for args in itertools.product(range(n), repeat=ar) if rng.random() < density}
    srcs = {c: rng.randrange(n) for c in sort.constants}
    return Structure(sort, n, tt, srcs)


def random_port_graph(rng: random.Random, n: int, ports=("p", "q"), density: float = 0.3,
                      port_density: float = 0.4) -> Structure:
    edges = [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < density]
    pm = {p: [v for v in range(n) if rng.random() < port_density] for p in ports}
    return st.make_graph(n, edges, ports=pm)


def random_s_term(rng: random.Random, leaves: int, labels=("a", "b"), ports=("p", "q")) -> Term:
    """A well-sorted term over graphs with sources and ports, built bottom-up so
    every operation is defined on its argument."""
    t, _ = _rand_s(rng, leaves, labels, ports)
    return t


def _rand_s(rng, leaves, labels, ports):
    if leaves == 1:
        kind = rng.choice(["src", "src", "port", "port", "edge", "edge", "loop", "v", "port-loop"])
        if kind == "src":
            t = Term("src", (rng.choice(labels),))
        elif kind in ("port", "port-loop"):
            t = Term(kind, (rng.choice(ports),))
        elif kind == "edge":
            a, b = rng.sample(labels, 2)
            t = Term("edge", (a, b))
        elif kind == "loop":
            t = Term("loop", (rng.choice(labels),))
        else:
            t = Term("v")
    else:
        k = rng.randint(1, leaves - 1)
        t1, v1 = _rand_s(rng, k, labels, ports)
        t2, v2 = _rand_s(rng, leaves - k, labels, ports)
        c1, c2 = set(v1.sort.constants), set(v2.sort.constants)
        choices = ["parallel"] + (["box"] if c1 == c2 else [])
        if not c1 & c2:
            choices += ["oplus", "oplus"]
        p1, p2 = sorted(v1.sort.ports), sorted(v2.sort.ports)
        if not c1 and not c2 and p1 and p2 and not set(p1) & set(p2):
            choices.append("otimes")
        op = rng.choice(choices)
        if op == "otimes":
            J = set()
            for _ in range(rng.randint(1, 2)):
                x, y = rng.choice(p1), rng.choice(p2)
                J.add((x, y) if rng.random() < 0.5 else (y, x))
            J = tuple(sorted(J))
            t = Term("otimes", (J,), (t1, t2))
        else:
            t = Term(op, (), (t1, t2))
    v = eval_term(t)
    for _ in range(rng.randint(0, 2)):
        u = _rand_unary(rng, v, labels)
        if u is None:
            break
        t = Term(u[0], u[1], (t,))
        v = eval_term(t)
    return t, v


def _rand_unary(rng, v, labels):
    C = list(v.sort.constants)
    P = list(v.sort.ports)
    opts = []
    for a in C:
        opts.append(("srcfg", (a,)))
        for b in labels:
            if b not in C:
                opts.append(("srcren", (a, b)))
            elif b != a:
                opts.append(("fus", (a, b)))
                opts.append(("fus-to", (a, b)))
    for p in P:
        opts.append(("fg", (p,)))
        for q in P:
            if p != q:
                opts.append(("add", (p, q)))
                opts.append(("ren", (p, q)))
    if not opts:
        return None
    return rng.choice(opts)


# ---------------------------------------------------------------- exhaustive HRM enumeration

HRM_LABELS = ("a", "b")


def reduce_multigraph(g: MultiGraph):
    """A finite summary of ``g`` that determines has_multiedges of every
    HRM context applied to ``g``: the source vertices with the edges among them
    plus one witness per distinct (out-sources, in-sources) neighbourhood of a
    non-source vertex.  Operations of HRM never delete edges, never fuse
    non-source vertices and never create sources, so edges between non-source
    vertices and repeated neighbourhood patterns cannot matter afterwards
    (apart from an existing multi-edge, which is permanent)."""
    if st.has_multiedges(g):
        return ("MULTI", tuple(sorted(g.constants)))
    S = sorted(set(g.sources.values()))
    idx = {v: i for i, v in enumerate(S)}
    edges = [(idx[u], idx[v]) for u, v in g.edges if u in idx and v in idx]
    pats = set()
    for x in range(g.size):
        if x in idx:
            continue
        o = frozenset(idx[v] for u, v in g.edges if u == x and v in idx)
        i = frozenset(idx[u] for u, v in g.edges if v == x and u in idx)
        if o or i:
            pats.add((o, i))
    k = len(S)
    for o, i in sorted(pats, key=lambda p: (sorted(p[0]), sorted(p[1]))):
        edges += [(k, v) for v in o] + [(u, k) for u in i]
        k += 1
    return MultiGraph(k, edges, {c: idx[v] for c, v in g.sources.items()})


_UNARY = {"srcfg": st.m_srcfg, "srcren": st.m_srcren, "mfus": st.mfus}
_BINARY = {"oplus": st.m_oplus, "parallel": m_parallel}


def _unary_nodes(C, labels):
    out = []
    for x in sorted(C):
        out.append(("srcfg", (x,)))
        for y in labels:
            if y not in C:
                out.append(("srcren", (x, y)))
            elif y != x:
                out.append(("mfus", (x, y)))
    return out


def hrm_leaves(labels=HRM_LABELS):
    a, b = labels
    return ([Term("src", (x,)) for x in labels] + [Term("loop", (x,)) for x in labels]
            + [Term("edge", (a, b)), Term("edge", (b, a)), Term("v"), Term("v-loop")])


def enumerate_hrm_classes(automaton, max_leaves: int, labels=HRM_LABELS):
    """Every HRM term with at most ``max_leaves`` leaves, up to the equivalence
    (reduced value, automaton state), closed under the unary operations.
    Returns {leaves: [(term, value, state), ...]}."""

    def close(level):
        work = list(level.values())
        while work:
            t, g, q = work.pop()
            for op, p in _unary_nodes(g.constants, labels):
                u = Term(op, p, (t,))
                gg = _UNARY[op](g, *p)
                qq = automaton.step(u, (q,))
                key = (reduce_multigraph(gg), qq)
                if key not in level:
                    level[key] = (u, gg, qq)
                    work.append(level[key])
        return level

    first = {}
    for t in hrm_leaves(labels):
        g = eval_term(t, "HRM")
        q = automaton.run(t)
        first[(reduce_multigraph(g), q)] = (t, g, q)
    levels = {1: close(first)}
    for k in range(2, max_leaves + 1):
        lev = {}
        for k1 in range(1, k):
            for t1, g1, q1 in levels[k1].values():
                for t2, g2, q2 in levels[k - k1].values():
                    ops = ["parallel"]
                    if not set(g1.constants) & set(g2.constants):
                        ops.append("oplus")
                    for op in ops:
                        u = Term(op, (), (t1, t2))
                        gg = _BINARY[op](g1, g2)
                        qq = automaton.step(u, (q1, q2))
                        lev.setdefault((reduce_multigraph(gg), qq), (u, gg, qq))
        levels[k] = close(lev)
    return {k: list(v.values()) for k, v in levels.items()}


# ---------------------------------------------------------------- expansion oracle

def expansion_oracle(g: Structure, m: int) -> int:
    """Number of expansions up to isomorphism, by generating every placement of
    every candidate label and keeping what ``is_expansion`` accepts.  Labels of
    one port are generated together and pre-filtered against the graph that
    only carries that port; the final filter checks the whole candidate."""
    from graft.expansions import in_label, is_expansion, out_label, s_label
    n = g.size
    per_port = []
    for p in g.sort.ports:
        gp = g.induced(range(n), st.graph_sort((), [p]))
        options = []
        s_opts = [None] + list(range(n))
        for s_choice in itertools.product(s_opts, repeat=m):
            for aux in itertools.product([False, True], repeat=2 * m):
                lab = {s_label(p, i + 1): v for i, v in enumerate(s_choice) if v is not None}
                aux_labels = [in_label(p, i + 1) for i in range(m) if aux[i]] + \
                             [out_label(p, i + 1) for i in range(m) if aux[m + i]]
                part = (lab, aux_labels)
                if is_expansion(gp, _assemble(gp, [(p, part)]), m):
                    options.append((p, part))
        per_port.append(options)
    seen = set()
    for combo in itertools.product(*per_port):
        h = _assemble(g, list(combo))
        if is_expansion(g, h, m):
            seen.add(_renumber_aux(h).canonical())
    return len(seen)


def _renumber_aux(h: Structure) -> Structure:
    """Auxiliaries of the same kind and port have equal neighbourhoods; renumber
    their indices to 1..k in increasing order."""
    groups = {}
    for c in h.sources:
        if c.startswith(("in(", "out(")):
            head, _, idx = c.rpartition(",")
            groups.setdefault(head, []).append(int(idx.rstrip(")")))
    ren = {}
    for head, idxs in groups.items():
        for new, old in enumerate(sorted(idxs), start=1):
            ren[f"{head},{old})"] = f"{head},{new})"
    src = {ren.get(c, c): v for c, v in h.sources.items()}
    return st.make_graph(h.size, h.edges, sources=src)


def _assemble(g: Structure, parts) -> Structure:
    n = g.size
    edges = set(g.edges)
    sources = {}
    k = n
    for p, (lab, aux_labels) in parts:
        sources.update(lab)
        ports = g.port_set(p)
        for c in aux_labels:
            sources[c] = k
            if c.startswith("in("):
                edges |= {(x, k) for x in ports}
            else:
                edges |= {(k, x) for x in ports}
            k += 1
    return st.make_graph(k, edges, sources=sources)


# ---------------------------------------------------------------- small brute-force oracles

def bicomplete_oracle(g: Structure, n: int, directed: bool = True) -> bool:
    adj = set()
    for u, v in g.edges:
        if u != v:
            adj.add((u, v))
            if not directed:
                adj.add((v, u))
    V = range(g.size)
    for U in itertools.combinations(V, n):
        rest = [x for x in V if x not in U]
        for W in itertools.combinations(rest, n):
            if all((u, w) in adj for u in U for w in W):
                return True
    return False


def sparse_oracle(g: Structure, k: int) -> bool:
    V = range(g.size)
    for r in range(1, g.size + 1):
        for X in itertools.combinations(V, r):
            xs = set(X)
            if sum(1 for u, v in g.edges if u in xs and v in xs) > k * r:
                return False
    return True


def module_oracle(g: Structure) -> set:
    """All modules, by checking every vertex subset."""
    n = g.size
    E = {(u, v) for u, v in g.edges if u != v}
    out = set()
    for r in range(1, n + 1):
        for X in itertools.combinations(range(n), r):
            xs = set(X)
            ok = True
            for z in range(n):
                if z in xs:
                    continue
                if len({(z, x) in E for x in xs}) > 1 or len({(x, z) in E for x in xs}) > 1:
                    ok = False
                    break
            if ok:
                out.add(frozenset(X))
    return out


def strong_module_oracle(g: Structure) -> set:
    mods = module_oracle(g)
    return {M for M in mods if all(not (M & N) or M <= N or N <= M for N in mods)}


def bool_table(f, names) -> tuple:
    """Truth table of a propositional formula by direct recursion."""
    from graft import logic as L

    def ev(h, val):
        if h == L.TRUE:
            return True
        if h == L.FALSE:
            return False
        if isinstance(h, L.Prop):
            return val[h.name]
        if isinstance(h, L.Not):
            return not ev(h.arg, val)
        if isinstance(h, L.And):
            return all(ev(a, val) for a in h.args)
        if isinstance(h, L.Or):
            return any(ev(a, val) for a in h.args)
        raise TypeError(h)

    return tuple(ev(f, dict(zip(names, bits))) for bits in itertools.product([False, True], repeat=len(names)))
