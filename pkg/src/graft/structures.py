"""Finite relational structures with sources, multigraphs and their elementary operations.

Elements are the integers ``0..size-1``.  Two structures compare equal when
they are isomorphic; hashing goes through a canonical form.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

EDGE = "edge"


class SortError(ValueError):
    pass


class CapacityError(RuntimeError):
    pass


def default_cap() -> int:
    try:
        return int(os.environ.get("GRAFT_CAP", "20"))
    except ValueError:
        return 20


def check_cap(n: int, cap: int | None, what: str) -> None:
    cap = default_cap() if cap is None else cap
    if n > cap:
        raise CapacityError(f"{what}: {n} elements exceeds capacity {cap}")


# ---------------------------------------------------------------- sorts

@dataclass(frozen=True, order=True)
class Sort:
    relations: tuple  # sorted ((name, arity), ...)
    constants: tuple  # sorted labels

    @staticmethod
    def of(relations: Mapping[str, int] | Iterable = (), constants: Iterable[str] = ()) -> "Sort":
        if isinstance(relations, Mapping):
            items = relations.items()
        else:
            items = relations
        rels = {}
        for name, ar in items:
            if ar < 1:
                raise SortError(f"relation {name} must have positive arity")
            if name in rels and rels[name] != ar:
                raise SortError(f"relation {name} declared with two arities")
            rels[str(name)] = int(ar)
        return Sort(tuple(sorted(rels.items())), tuple(sorted(set(map(str, constants)))))

    @property
    def rel(self) -> dict:
        return dict(self.relations)

    def arity(self, name: str) -> int:
        for r, a in self.relations:
            if r == name:
                return a
        raise SortError(f"unknown relation {name}")

    def has_rel(self, name: str) -> bool:
        return any(r == name for r, _ in self.relations)

    @property
    def ports(self) -> tuple:
        return tuple(r for r, a in self.relations if a == 1)

    def is_graph(self) -> bool:
        return all(a == 1 or (r == EDGE and a == 2) for r, a in self.relations)

    def union(self, other: "Sort", disjoint: bool = True) -> "Sort":
        if disjoint and set(self.constants) & set(other.constants):
            raise SortError(f"constant sets overlap: {sorted(set(self.constants) & set(other.constants))}")
        rels = dict(self.relations)
        for r, a in other.relations:
            if rels.get(r, a) != a:
                raise SortError(f"relation {r} has different arities")
            rels[r] = a
        return Sort.of(rels, set(self.constants) | set(other.constants))

    def with_constants(self, constants: Iterable[str]) -> "Sort":
        return Sort(self.relations, tuple(sorted(set(constants))))

    def with_relations(self, relations) -> "Sort":
        return Sort.of(relations, self.constants)

    def to_json(self) -> dict:
        return {"relations": dict(self.relations), "constants": list(self.constants)}

    def __str__(self):
        rels = ",".join(f"{r}/{a}" for r, a in self.relations)
        return f"({{{rels}}},{{{','.join(self.constants)}}})"


def graph_sort(constants: Iterable[str] = (), ports: Iterable[str] = ()) -> Sort:
    rels = {EDGE: 2}
    for p in ports:
        if p == EDGE:
            raise SortError("'edge' cannot be a port label")
        rels[str(p)] = 1
    return Sort.of(rels, constants)


# ---------------------------------------------------------------- structures

class Structure:
    """A finite relational structure over a :class:`Sort`.

    ``tuples`` maps each relation name to a frozenset of id tuples and
    ``sources`` maps each constant to an element.  Instances are treated as
    immutable.
    """

    __slots__ = ("sort", "size", "tuples", "sources", "_canon")

    def __init__(self, sort: Sort, size: int, tuples: Mapping | None = None,
                 sources: Mapping | None = None):
        tuples = tuples or {}
        sources = dict(sources or {})
        if size < 0:
            raise SortError("negative domain size")
        rels = sort.rel
        for r in tuples:
            if r not in rels:
                raise SortError(f"relation {r} not in sort {sort}")
        tt = {}
        for r, ar in rels.items():
            got = frozenset(tuple(int(x) for x in t) for t in tuples.get(r, ()))
            for t in got:
                if len(t) != ar:
                    raise SortError(f"tuple {t} has wrong length for {r}/{ar}")
                for x in t:
                    if not 0 <= x < size:
                        raise SortError(f"tuple {t} of {r} leaves the domain")
            tt[r] = got
        if set(sources) != set(sort.constants):
            raise SortError(f"sources {sorted(sources)} do not match constants {list(sort.constants)}")
        for c, x in sources.items():
            if not 0 <= x < size:
                raise SortError(f"source {c} outside domain")
        if sort.constants and size == 0:
            raise SortError("empty domain with constants")
        self.sort = sort
        self.size = size
        self.tuples = tt
        self.sources = {c: int(sources[c]) for c in sort.constants}
        self._canon = None

    # -- basic views
    @property
    def domain(self) -> range:
        return range(self.size)

    @property
    def edges(self) -> frozenset:
        return self.tuples.get(EDGE, frozenset())

    def labels_at(self, x: int) -> tuple:
        return tuple(c for c in self.sort.constants if self.sources[c] == x)

    def ports_of(self, x: int) -> tuple:
        return tuple(p for p in self.sort.ports if (x,) in self.tuples[p])

    def port_set(self, p: str) -> set:
        return {t[0] for t in self.tuples.get(p, ())}

    def holds(self, r: str, *args: int) -> bool:
        return tuple(args) in self.tuples[r]

    def relabel(self, order: list) -> "Structure":
        """``order[i]`` is the old id placed at new position ``i``."""
        m = {old: new for new, old in enumerate(order)}
        return self.map_ids(m, len(order))

    def map_ids(self, m: Mapping, size: int) -> "Structure":
        tt = {r: {tuple(m[x] for x in t) for t in ts if all(x in m for x in t)}
              for r, ts in self.tuples.items()}
        return Structure(self.sort, size, tt, {c: m[x] for c, x in self.sources.items()})

    def induced(self, keep: Iterable[int], sort: Sort | None = None) -> "Structure":
        keep = sorted(set(keep))
        m = {x: i for i, x in enumerate(keep)}
        s = sort or self.sort
        tt = {r: {tuple(m[x] for x in t) for t in ts if all(x in m for x in t)}
              for r, ts in self.tuples.items() if s.has_rel(r)}
        src = {c: m[self.sources[c]] for c in s.constants}
        return Structure(s, len(keep), tt, src)

    def replace(self, sort: Sort | None = None, tuples=None, sources=None, size=None) -> "Structure":
        return Structure(sort or self.sort, self.size if size is None else size,
                         self.tuples if tuples is None else tuples,
                         self.sources if sources is None else sources)

    # -- equality is isomorphism
    def canonical(self):
        if self._canon is None:
            self._canon = canonical_form(self)
        return self._canon[1]

    def canonical_order(self) -> list:
        self.canonical()
        return list(self._canon[0])

    def canonical_structure(self) -> "Structure":
        return self.relabel(self.canonical_order())

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return isomorphic(self, other)

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        return f"Structure({to_json(self)})"


def single(sort: Sort, ports=(), loop: bool = False) -> Structure:
    """One element carrying every constant of ``sort`` and the given ports."""
    tt = {p: {(0,)} for p in ports}
    if loop:
        tt[EDGE] = {(0, 0)}
    return Structure(sort, 1, tt, {c: 0 for c in sort.constants})


def empty(sort: Sort = Sort.of()) -> Structure:
    return Structure(sort, 0)


def make_graph(n: int, edges=(), sources=None, ports=None, symmetric: bool = False) -> Structure:
    ports = ports or {}
    sources = sources or {}
    es = set()
    for u, v in edges:
        es.add((u, v))
        if symmetric:
            es.add((v, u))
    tt = {EDGE: es}
    for p, vs in ports.items():
        tt[p] = {(v,) for v in vs}
    return Structure(graph_sort(sources.keys(), ports.keys()), n, tt, sources)


# ---------------------------------------------------------------- canonical form

def _incidence(s: Structure):
    inc = [[] for _ in range(s.size)]
    for r, ts in s.tuples.items():
        for t in ts:
            for x in set(t):
                inc[x].append((r, t))
    return inc


def _refine(colors: list, inc) -> list:
    ncls = len(set(colors))
    while True:
        sigs = []
        for x, items in enumerate(inc):
            sig = sorted((r, tuple(i for i, y in enumerate(t) if y == x), tuple(colors[y] for y in t))
                         for r, t in items)
            sigs.append((colors[x], tuple(sig)))
        uniq = sorted(set(sigs))
        idx = {sg: i for i, sg in enumerate(uniq)}
        colors = [idx[sg] for sg in sigs]
        if len(uniq) == ncls:
            return colors
        ncls = len(uniq)


def _swap_is_auto(s: Structure, u: int, v: int, inc) -> bool:
    def sw(x):
        return v if x == u else u if x == v else x
    for x in (u, v):
        for r, t in inc[x]:
            if tuple(sw(y) for y in t) not in s.tuples[r]:
                return False
    return True


def _encode(s: Structure, order) -> tuple:
    m = {old: new for new, old in enumerate(order)}
    rels = tuple(tuple(sorted(tuple(m[x] for x in t) for t in s.tuples[r])) for r, _ in s.sort.relations)
    src = tuple(m[s.sources[c]] for c in s.sort.constants)
    return rels, src


def canonical_form(s: Structure):
    """Individualisation/refinement with twin pruning.

    Returns ``(order, key)``; ``key`` is identical for isomorphic structures.
    """
    n = s.size
    if n == 0:
        return [], (s.sort, 0, _encode(s, []))
    inc = _incidence(s)
    init = [tuple(s.labels_at(x)) for x in range(n)]
    uniq = sorted(set(init))
    colors = [uniq.index(c) for c in init]
    best = [None, None]

    def search(colors):
        colors = _refine(colors, inc)
        if len(set(colors)) == n:
            order = sorted(range(n), key=lambda x: colors[x])
            key = _encode(s, order)
            if best[1] is None or key < best[1]:
                best[0], best[1] = order, key
            return
        counts = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, k in counts.items() if k > 1)
        cell = [x for x in range(n) if colors[x] == target]
        reps = []
        for x in cell:
            if not any(_swap_is_auto(s, x, y, inc) for y in reps):
                reps.append(x)
        for x in reps:
            c2 = [2 * c + 1 for c in colors]
            c2[x] = 2 * colors[x]
            search(c2)

    search(colors)
    return best[0], (s.sort, n, best[1])


def isomorphic(s: Structure, t: Structure) -> bool:
    if s.sort != t.sort or s.size != t.size:
        return False
    if {r: len(v) for r, v in s.tuples.items()} != {r: len(v) for r, v in t.tuples.items()}:
        return False
    return s.canonical() == t.canonical()


def find_isomorphism(s: Structure, t: Structure) -> dict | None:
    if not isomorphic(s, t):
        return None
    os_, ot = s.canonical_order(), t.canonical_order()
    return {os_[i]: ot[i] for i in range(s.size)}


# ---------------------------------------------------------------- operations

def oplus(s: Structure, t: Structure) -> Structure:
    sort = s.sort.union(t.sort)
    k = s.size
    tt = {r: set() for r in sort.rel}
    for r, ts in s.tuples.items():
        tt[r] |= ts
    for r, ts in t.tuples.items():
        tt[r] |= {tuple(x + k for x in tp) for tp in ts}
    src = dict(s.sources)
    src.update({c: x + k for c, x in t.sources.items()})
    return Structure(sort, k + t.size, tt, src)


def compute_type(s: Structure) -> Structure:
    """Restriction to the source elements, numbered by the first constant naming
    each one; since every element is named this labelling is canonical."""
    order = []
    for c in s.sort.constants:
        x = s.sources[c]
        if x not in order:
            order.append(x)
    m = {x: i for i, x in enumerate(order)}
    tt = {r: {tuple(m[x] for x in t) for t in ts if all(x in m for x in t)} for r, ts in s.tuples.items()}
    return Structure(s.sort, len(order), tt, {c: m[x] for c, x in s.sources.items()})


def is_source_separated(s: Structure) -> bool:
    return len(set(s.sources.values())) == len(s.sources)


def identify(s: Structure, x: int, y: int) -> Structure:
    """Merge element ``y`` into ``x`` (ids above ``y`` shift down)."""
    if x == y:
        return s
    keep, drop = min(x, y), max(x, y)
    m = {}
    for z in range(s.size):
        if z == drop:
            m[z] = keep
        else:
            m[z] = z - 1 if z > drop else z
    return s.map_ids(m, s.size - 1)


def srcren(s: Structure, a: str, b: str) -> Structure:
    if a not in s.sources:
        raise SortError(f"unknown source {a}")
    if b in s.sources and b != a:
        raise SortError(f"source {b} already present")
    src = {(b if c == a else c): x for c, x in s.sources.items()}
    return Structure(s.sort.with_constants(src), s.size, s.tuples, src)


def srcfg(s: Structure, a: str) -> Structure:
    if a not in s.sources:
        raise SortError(f"unknown source {a}")
    src = {c: x for c, x in s.sources.items() if c != a}
    return Structure(s.sort.with_constants(src), s.size, s.tuples, src)


def srcfg_all(s: Structure) -> Structure:
    return Structure(s.sort.with_constants(()), s.size, s.tuples, {})


def fus(s: Structure, a: str, b: str) -> Structure:
    if a not in s.sources or b not in s.sources:
        raise SortError(f"unknown source among {a},{b}")
    if a == b:
        raise SortError("fus needs two distinct labels")
    return identify(s, s.sources[a], s.sources[b])


def fus_to(s: Structure, a: str, b: str) -> Structure:
    return srcfg(fus(s, a, b), a)


def parallel(s: Structure, t: Structure) -> Structure:
    shared = sorted(set(s.sort.constants) & set(t.sort.constants))
    sort = s.sort.union(t.sort.with_constants(set(t.sort.constants) - set(shared)), disjoint=True)
    sort = sort.with_constants(set(s.sort.constants) | set(t.sort.constants))
    k = s.size
    tt = {r: set() for r in sort.rel}
    for r, ts in s.tuples.items():
        tt[r] |= ts
    for r, ts in t.tuples.items():
        tt[r] |= {tuple(x + k for x in tp) for tp in ts}
    src = dict(s.sources)
    for c, x in t.sources.items():
        if c not in src:
            src[c] = x + k
    u = Structure(sort, k + t.size, tt, src)
    # fold each shared pair together, tracking ids as they shift
    pos = list(range(k + t.size))
    for c in shared:
        x, y = pos[s.sources[c]], pos[t.sources[c] + k]
        if x != y:
            keep, drop = min(x, y), max(x, y)
            u = identify(u, keep, drop)
            pos = [keep if p == drop else (p - 1 if p > drop else p) for p in pos]
    return u


def box(s: Structure, t: Structure) -> Structure:
    if set(s.sort.constants) != set(t.sort.constants):
        raise SortError("box needs equal source sets")
    return srcfg_all(parallel(s, t))


def add_edges(s: Structure, p: str, q: str) -> Structure:
    if p == q:
        raise SortError("add needs distinct port labels")
    ps, qs = s.port_set(p), s.port_set(q)
    for lab in (p, q):
        if not s.sort.has_rel(lab):
            raise SortError(f"unknown port {lab}")
    tt = dict(s.tuples)
    tt[EDGE] = set(s.edges) | {(x, y) for x in ps for y in qs}
    return s.replace(tuples=tt)


def mdf(s: Structure, pairs: Iterable, target: Iterable[str] | None = None) -> Structure:
    pairs = sorted(set((str(p), str(q)) for p, q in pairs))
    for p, _ in pairs:
        if not s.sort.has_rel(p) or s.sort.arity(p) != 1:
            raise SortError(f"mdf source label {p} not a port of the input")
    ports = set(q for _, q in pairs) | set(target or ())
    sort = graph_sort(s.sort.constants, ports)
    tt = {EDGE: s.edges}
    for q in ports:
        tt[q] = {(x,) for p, q2 in pairs if q2 == q for (x,) in s.tuples[p]}
    return Structure(sort, s.size, tt, s.sources)


def ren(s: Structure, p: str, q: str) -> Structure:
    if p == q:
        raise SortError("ren needs distinct labels")
    if not s.sort.has_rel(p):
        raise SortError(f"unknown port {p}")
    pairs = [(r, r) for r in s.sort.ports if r != p] + [(p, q)]
    return mdf(s, pairs)


def fg(s: Structure, p: str) -> Structure:
    if not s.sort.has_rel(p):
        raise SortError(f"unknown port {p}")
    return mdf(s, [(r, r) for r in s.sort.ports if r != p])


def mark(s: Structure, i: str) -> Structure:
    """Every vertex becomes an ``i``-port (other ports dropped)."""
    sort = graph_sort(s.sort.constants, [i])
    return Structure(sort, s.size, {EDGE: s.edges, i: {(x,) for x in range(s.size)}}, s.sources)


def otimes(J: Iterable, s: Structure, t: Structure) -> Structure:
    P, Q = set(s.sort.ports), set(t.sort.ports)
    if P & Q:
        raise SortError("otimes needs disjoint port sets")
    u = oplus(s, t)
    for p, q in sorted(set(J)):
        if not ((p in P and q in Q) or (p in Q and q in P)):
            raise SortError(f"pair ({p},{q}) does not cross the two port sets")
        u = add_edges(u, p, q)
    return u


def _check_pairs(s: Structure, A) -> list:
    pairs = sorted({tuple(sorted(pr)) for pr in A})
    for a, b in pairs:
        if a == b:
            raise SortError("relation must be anti-reflexive")
        if a not in s.sources or b not in s.sources:
            raise SortError(f"unknown source in pair ({a},{b})")
    return pairs


def del_rel(s: Structure, A) -> Structure:
    pairs = _check_pairs(s, A)
    kill = set()
    for a, b in pairs:
        x, y = s.sources[a], s.sources[b]
        kill |= {(x, y), (y, x)}
    tt = dict(s.tuples)
    tt[EDGE] = s.edges - kill
    return s.replace(tuples=tt)


def fus_rel(s: Structure, A, order=None) -> Structure:
    pairs = _check_pairs(s, A)
    if order is not None:
        pairs = [pairs[i] for i in order]
    for a, b in pairs:
        s = fus(s, a, b)
    return s


def powerset_port_form(g: Structure) -> Structure:
    """Each vertex gets exactly one port named after its set of labels."""
    P = g.sort.ports
    names = {}
    for x in range(g.size):
        key = tuple(p for p in P if (x,) in g.tuples[p])
        names[x] = "{" + ",".join(key) + "}"
    sort = graph_sort(g.sort.constants, set(names.values()))
    tt = {EDGE: g.edges}
    for x, nm in names.items():
        tt.setdefault(nm, set()).add((x,))
    return Structure(sort, g.size, tt, g.sources)


@dataclass(frozen=True)
class SourceSplit:
    result: Structure
    h0: dict
    c0: frozenset
    c1: frozenset


def split_sources(s: Structure) -> SourceSplit:
    C = s.sort.constants
    h0 = {c: min(d for d in C if s.sources[d] == s.sources[c]) for c in C}
    c0 = frozenset(h0.values())
    c1 = frozenset(C) - c0
    src = {c: s.sources[c] for c in c0}
    for i, c in enumerate(sorted(c1)):
        src[c] = s.size + i
    res = Structure(s.sort, s.size + len(c1), s.tuples, src)
    return SourceSplit(res, h0, c0, c1)


# ---------------------------------------------------------------- enumeration

def _all_tuples(n: int, ar: int):
    return list(itertools.product(range(n), repeat=ar))


def enumerate_structures(sort: Sort, max_size: int, up_to_iso: bool = False,
                         min_size: int = 0) -> Iterator[Structure]:
    seen = set()
    lo = max(min_size, 1 if sort.constants else 0)
    for n in range(lo, max_size + 1):
        per_rel = [(r, _all_tuples(n, a)) for r, a in sort.relations]
        total_bits = sum(len(ts) for _, ts in per_rel)
        for mask in range(1 << total_bits):
            tt, off = {}, 0
            for r, ts in per_rel:
                tt[r] = [ts[i] for i in range(len(ts)) if mask >> (off + i) & 1]
                off += len(ts)
            for srcs in itertools.product(range(n), repeat=len(sort.constants)):
                s = Structure(sort, n, tt, dict(zip(sort.constants, srcs)))
                if up_to_iso:
                    k = s.canonical()
                    if k in seen:
                        continue
                    seen.add(k)
                yield s


def enumerate_types(sort: Sort, separated_only: bool = False) -> Iterator[Structure]:
    """All types of the sort: every element carries a source."""
    C = sort.constants
    seen = set()
    for n in range(1 if C else 0, len(C) + 1):
        for srcs in itertools.product(range(n), repeat=len(C)):
            if set(srcs) != set(range(n)):
                continue
            if separated_only and len(set(srcs)) != len(srcs):
                continue
            # fix labelling: first occurrences increasing
            firsts = []
            for x in srcs:
                if x not in firsts:
                    firsts.append(x)
            if firsts != sorted(firsts):
                continue
            per_rel = [(r, _all_tuples(n, a)) for r, a in sort.relations]
            bits = sum(len(ts) for _, ts in per_rel)
            for mask in range(1 << bits):
                tt, off = {}, 0
                for r, ts in per_rel:
                    tt[r] = [ts[i] for i in range(len(ts)) if mask >> (off + i) & 1]
                    off += len(ts)
                s = Structure(sort, n, tt, dict(zip(C, srcs)))
                k = s.canonical()
                if k not in seen:
                    seen.add(k)
                    yield s


def type_count_bound(sort: Sort) -> int:
    c = len(sort.constants)
    bound = 1
    for i in range(2, c + 1):
        bound *= i
    for _, a in sort.relations:
        bound *= 2 ** (c ** a)
    return bound


# ---------------------------------------------------------------- predicates

def _adjacency(g: Structure, directed: bool):
    out = [set() for _ in range(g.size)]
    for u, v in g.edges:
        if u == v:
            continue
        out[u].add(v)
        if not directed:
            out[v].add(u)
    return out


def has_bicomplete(g: Structure, n: int, directed: bool = True, cap: int | None = None) -> bool:
    """Is there a (directed) K_{n,n} subgraph on disjoint vertex sets?"""
    if n < 1:
        raise ValueError("n must be positive")
    check_cap(g.size, cap, "has_bicomplete")
    out = _adjacency(g, directed)
    cand = [u for u in range(g.size) if len(out[u]) >= n]
    if len(cand) < n:
        return False

    def grow(chosen, start, common):
        if len(common) < n:
            return False
        if len(chosen) == n:
            return len(common - set(chosen)) >= n
        for i in range(start, len(cand)):
            u = cand[i]
            if u in common and len(common) - 1 < n:
                continue
            if grow(chosen + [u], i + 1, common & out[u]):
                return True
        return False

    return grow([], 0, set(range(g.size)))


def is_uniformly_k_sparse(g: Structure, k: int, cap: int | None = None) -> bool:
    if k < 0:
        raise ValueError("k must be non-negative")
    check_cap(g.size, cap, "is_uniformly_k_sparse")
    n = g.size
    outmask = [0] * n
    for u, v in g.edges:
        outmask[u] |= 1 << v
    for mask in range(1, 1 << n):
        e = 0
        m, cnt = mask, 0
        while m:
            low = m & -m
            u = low.bit_length() - 1
            e += bin(outmask[u] & mask).count("1")
            cnt += 1
            m ^= low
        if e > k * cnt:
            return False
    return True


def bicomplete_graph(n: int, directed: bool = True) -> Structure:
    edges = [(i, n + j) for i in range(n) for j in range(n)]
    return make_graph(2 * n, edges, symmetric=not directed)


def complete_graph(n: int) -> Structure:
    return make_graph(n, [(i, j) for i in range(n) for j in range(n) if i != j])


def path_graph(n: int) -> Structure:
    return make_graph(n, [(i, i + 1) for i in range(n - 1)], symmetric=True)


# ---------------------------------------------------------------- multigraphs

class MultiGraph:
    """Vertices ``0..size-1``; edges listed in order, ids ``e0, e1, ...``."""

    __slots__ = ("constants", "size", "edges", "sources")

    def __init__(self, size: int, edges=(), sources=None):
        sources = dict(sources or {})
        self.size = size
        self.edges = tuple((int(u), int(v)) for u, v in edges)
        for u, v in self.edges:
            if not (0 <= u < size and 0 <= v < size):
                raise SortError("edge endpoint outside vertex set")
        for c, x in sources.items():
            if not 0 <= x < size:
                raise SortError(f"source {c} outside vertex set")
        if sources and size == 0:
            raise SortError("empty multigraph with sources")
        self.constants = tuple(sorted(sources))
        self.sources = {c: int(sources[c]) for c in self.constants}

    @property
    def edge_ids(self) -> dict:
        return {f"e{i}": e for i, e in enumerate(self.edges)}

    def __repr__(self):
        return f"MultiGraph({self.size}, {list(self.edges)}, {self.sources})"

    def to_structure(self) -> Structure:
        """Two-sorted encoding: vertices first, then one element per edge."""
        n, m = self.size, len(self.edges)
        sort = Sort.of({"vertex": 1, "inc": 3}, self.constants)
        tt = {"vertex": {(x,) for x in range(n)},
              "inc": {(n + i, u, v) for i, (u, v) in enumerate(self.edges)}}
        return Structure(sort, n + m, tt, self.sources)

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self.to_structure() == other.to_structure()

    def __hash__(self):
        return hash(self.to_structure())


def m_oplus(g: MultiGraph, h: MultiGraph) -> MultiGraph:
    if set(g.constants) & set(h.constants):
        raise SortError("constant sets overlap")
    k = g.size
    src = dict(g.sources)
    src.update({c: x + k for c, x in h.sources.items()})
    return MultiGraph(k + h.size, list(g.edges) + [(u + k, v + k) for u, v in h.edges], src)


def m_srcren(g: MultiGraph, a: str, b: str) -> MultiGraph:
    if a not in g.sources:
        raise SortError(f"unknown source {a}")
    if b in g.sources and b != a:
        raise SortError(f"source {b} already present")
    return MultiGraph(g.size, g.edges, {(b if c == a else c): x for c, x in g.sources.items()})


def m_srcfg(g: MultiGraph, a: str) -> MultiGraph:
    if a not in g.sources:
        raise SortError(f"unknown source {a}")
    return MultiGraph(g.size, g.edges, {c: x for c, x in g.sources.items() if c != a})


def mfus(g: MultiGraph, a: str, b: str) -> MultiGraph:
    if a not in g.sources or b not in g.sources:
        raise SortError(f"unknown source among {a},{b}")
    x, y = g.sources[a], g.sources[b]
    if x == y:
        return g
    keep, drop = min(x, y), max(x, y)

    def f(z):
        return keep if z == drop else (z - 1 if z > drop else z)
    return MultiGraph(g.size - 1, [(f(u), f(v)) for u, v in g.edges],
                      {c: f(z) for c, z in g.sources.items()})


def mgraph_op(g: MultiGraph, op: str, *args):
    if op == "m_oplus":
        return m_oplus(g, args[0])
    if op == "m_srcren":
        return m_srcren(g, *args)
    if op == "m_srcfg":
        return m_srcfg(g, *args)
    if op == "mfus":
        return mfus(g, *args)
    raise ValueError(f"unknown multigraph operation {op}")


def has_multiedges(g: MultiGraph) -> bool:
    return len(set(g.edges)) != len(g.edges)


def simplify_u(g: MultiGraph) -> Structure:
    return Structure(graph_sort(g.constants), g.size, {EDGE: set(g.edges)}, g.sources)


def inject_iota(s: Structure) -> MultiGraph:
    if s.sort.relations != ((EDGE, 2),):
        raise SortError("inject_iota expects an edge-only graph")
    return MultiGraph(s.size, sorted(s.edges), s.sources)


def eta(g: Structure) -> frozenset:
    """Pairs of source labels on distinct vertices with a common in- or out-neighbour."""
    if isinstance(g, MultiGraph):
        raise TypeError("eta is defined on simple graphs; apply simplify_u first")
    C = g.sort.constants
    outn = [set() for _ in range(g.size)]
    inn = [set() for _ in range(g.size)]
    for u, v in g.edges:
        outn[u].add(v)
        inn[v].add(u)
    res = set()
    for a, b in itertools.combinations(C, 2):
        x, y = g.sources[a], g.sources[b]
        if x == y:
            continue
        if inn[x] & inn[y] or outn[x] & outn[y]:
            res.add(frozenset((a, b)))
    return frozenset(res)


def predict_mfus_multiedge(t: Structure, e: frozenset, a: str, b: str) -> bool:
    if a == b:
        raise ValueError("labels must differ")
    if a not in t.sources or b not in t.sources:
        raise SortError(f"labels {a},{b} not in sort")
    if frozenset((a, b)) in e:
        return True
    return has_multiedges(mfus(inject_iota_any(t), a, b))


def inject_iota_any(s: Structure) -> MultiGraph:
    return MultiGraph(s.size, sorted(s.edges), s.sources)


# ---------------------------------------------------------------- JSON

def to_json(s) -> dict:
    if isinstance(s, MultiGraph):
        return {"relations": {}, "constants": list(s.constants), "domain": s.size,
                "edges": {f"e{i}": [u, v] for i, (u, v) in enumerate(s.edges)},
                "sources": dict(s.sources)}
    return {"relations": dict(s.sort.relations), "constants": list(s.sort.constants),
            "domain": s.size,
            "tuples": {r: sorted(list(t) for t in s.tuples[r]) for r, _ in s.sort.relations},
            "sources": {c: s.sources[c] for c in s.sort.constants}}


def from_json(d: Mapping):
    if "edges" in d:
        edges = d["edges"]
        items = sorted(edges.items(), key=lambda kv: (len(kv[0]), kv[0])) if isinstance(edges, dict) else enumerate(edges)
        return MultiGraph(int(d["domain"]), [tuple(e) for _, e in items], d.get("sources", {}))
    sort = Sort.of(d.get("relations", {}), d.get("constants", []))
    return Structure(sort, int(d["domain"]), {r: [tuple(t) for t in ts] for r, ts in d.get("tuples", {}).items()},
                     d.get("sources", {}))


def dumps(s) -> str:
    return json.dumps(to_json(s), sort_keys=True)


def loads(text: str):
    return from_json(json.loads(text))


def identical(s: Structure, t: Structure) -> bool:
    """Literal equality of the data (same ids), stronger than ``==``."""
    return (s.sort == t.sort and s.size == t.size and s.tuples == t.tuples
            and s.sources == t.sources)
