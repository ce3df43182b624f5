"""Modular decomposition of directed graphs, primality and membership in F-graphs."""
from __future__ import annotations

from dataclasses import dataclass, field

from .structures import EDGE, SortError, Structure, graph_sort, make_graph


def _adj(g: Structure):
    n = g.size
    outn, inn = [0] * n, [0] * n
    for u, v in g.edges:
        if u != v:
            outn[u] |= 1 << v
            inn[v] |= 1 << u
    return outn, inn


def _check_graph(g: Structure):
    if g.sort.relations != ((EDGE, 2),) or g.sort.constants:
        raise SortError("modular decomposition expects a graph without ports or sources")


def _bits(m):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


def _to_set(m) -> frozenset:
    return frozenset(_bits(m))


class _Modules:
    """Module closures on a vertex set given as a bitmask."""

    def __init__(self, g: Structure, V: int):
        self.outn, self.inn = _adj(g)
        self.V = V
        self._min = {}

    def is_module(self, X: int) -> bool:
        return self._splitter(X) is None

    def _splitter(self, X: int):
        for z in _bits(self.V & ~X):
            o, i = self.outn[z] & X, self.inn[z] & X
            if (o and o != X) or (i and i != X):
                return z
        return None

    def minimal(self, x: int, y: int) -> int:
        """Smallest module containing x and y."""
        key = (min(x, y), max(x, y))
        if key not in self._min:
            X = (1 << x) | (1 << y)
            while True:
                z = self._splitter(X)
                if z is None:
                    break
                X |= 1 << z
            self._min[key] = X
        return self._min[key]

    def strong_closure(self, x: int, y: int) -> int:
        """Smallest strong module containing x and y: grow the minimal module by
        every pairwise-minimal module that overlaps it."""
        X = self.minimal(x, y)
        verts = list(_bits(self.V))
        changed = True
        while changed:
            changed = False
            for i, u in enumerate(verts):
                for w in verts[i + 1:]:
                    M = self.minimal(u, w)
                    if M & X and M & ~X and X & ~M:
                        X |= M
                        changed = True
        return X


def find_strong_modules(g: Structure, vertices=None) -> list:
    """Maximal strong modules of ``g`` (restricted to ``vertices``) other than the whole set."""
    _check_graph(g)
    verts = sorted(range(g.size) if vertices is None else vertices)
    V = 0
    for v in verts:
        V |= 1 << v
    if len(verts) <= 1:
        return [frozenset(verts)] if verts else []
    mods = _Modules(g, V)
    best = {v: 1 << v for v in verts}
    for i, x in enumerate(verts):
        for y in verts[i + 1:]:
            S = mods.strong_closure(x, y)
            if S == V:
                continue
            for v in _bits(S):
                if bin(S).count("1") > bin(best[v]).count("1"):
                    best[v] = S
    return sorted({_to_set(m) for m in best.values()}, key=lambda s: min(s))


def all_strong_modules(g: Structure) -> set:
    """Every strong module (including singletons and the whole vertex set)."""
    _check_graph(g)
    out = {frozenset([v]) for v in range(g.size)}
    if g.size:
        out.add(frozenset(range(g.size)))
    mods = _Modules(g, (1 << g.size) - 1)
    for x in range(g.size):
        for y in range(x + 1, g.size):
            out.add(_to_set(mods.strong_closure(x, y)))
    return out


def is_module(g: Structure, X) -> bool:
    m = 0
    for v in X:
        m |= 1 << v
    return _Modules(g, (1 << g.size) - 1).is_module(m)


def is_prime(g: Structure) -> bool:
    """No module other than singletons and the whole set; loops are ignored.
    Graphs with fewer than two vertices are not prime."""
    _check_graph(g)
    n = g.size
    if n < 2:
        return False
    mods = _Modules(g, (1 << n) - 1)
    return all(mods.minimal(x, y) == mods.V for x in range(n) for y in range(x + 1, n))


@dataclass
class ModNode:
    """``kind`` is leaf, parallel, series, order or prime.  Children of an order
    node are listed along the order; the quotient has vertex i for child i."""
    kind: str
    vertices: frozenset
    quotient: Structure | None = None
    children: list = field(default_factory=list)
    loop: bool = False

    def to_json(self) -> dict:
        if self.kind == "leaf":
            return {"kind": "leaf", "vertex": next(iter(self.vertices)), "loop": self.loop}
        return {"kind": self.kind, "vertices": sorted(self.vertices),
                "quotient": {"size": self.quotient.size, "edges": sorted(map(list, self.quotient.edges))},
                "children": [c.to_json() for c in self.children]}

    def depth(self) -> int:
        return 0 if self.kind == "leaf" else 1 + max(c.depth() for c in self.children)

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


def _kind(q: Structure) -> str:
    n = q.size
    E = {(u, v) for u, v in q.edges if u != v}
    if not E:
        return "parallel"
    if len(E) == n * (n - 1):
        return "series"
    if all(((u, v) in E) != ((v, u) in E) for u in range(n) for v in range(u + 1, n)) and \
            all((u, w) in E for (u, v) in E for (v2, w) in E if v == v2 and u != w):
        return "order"
    return "prime"


def modular_decomposition(g: Structure) -> ModNode:
    _check_graph(g)
    if g.size == 0:
        raise ValueError("the empty graph has no modular decomposition")
    loops = {u for u, v in g.edges if u == v}
    return _decompose(g, frozenset(range(g.size)), loops)


def _decompose(g, verts, loops):
    if len(verts) == 1:
        v = next(iter(verts))
        return ModNode("leaf", verts, loop=v in loops)
    parts = find_strong_modules(g, verts)
    reps = [min(p) for p in parts]
    idx = {r: i for i, r in enumerate(reps)}
    q = make_graph(len(parts), [(idx[u], idx[v]) for u, v in g.edges if u in idx and v in idx and u != v])
    kind = _kind(q)
    if kind == "order":
        # list children along the order: fewest predecessors first
        indeg = [sum(1 for u, v in q.edges if v == i) for i in range(q.size)]
        perm = sorted(range(q.size), key=lambda i: indeg[i])
        parts = [parts[i] for i in perm]
        pos = {old: new for new, old in enumerate(perm)}
        q = make_graph(q.size, [(pos[u], pos[v]) for u, v in q.edges])
    kids = [_decompose(g, p, loops) for p in parts]
    return ModNode(kind, verts, q, kids)


def evaluate_tree(t: ModNode) -> Structure:
    from .terms import modular_compose
    if t.kind == "leaf":
        return make_graph(1, [(0, 0)] if t.loop else [])
    return modular_compose(t.quotient, [evaluate_tree(c) for c in t.children])


def tree_term(t: ModNode):
    """The tree as a term over the modular signature."""
    from .terms import Term, modular_term
    if t.kind == "leaf":
        return Term("v-loop" if t.loop else "v")
    return modular_term(t.quotient, [tree_term(c) for c in t.children])


def quotients(t: ModNode) -> list:
    return [n.quotient for n in t.nodes() if n.kind != "leaf"]


def _loopless(h: Structure) -> Structure:
    return make_graph(h.size, [(u, v) for u, v in h.edges if u != v])


class FamilyF:
    """A finite set of prime graphs (loops dropped)."""

    def __init__(self, graphs):
        self.graphs = []
        for h in graphs:
            _check_graph(h)
            h = _loopless(h)
            if not is_prime(h):
                raise SortError("members of F must be prime graphs")
            if h not in self.graphs:
                self.graphs.append(h)

    def __contains__(self, h: Structure) -> bool:
        return _loopless(h) in self.graphs


EDGELESS2 = make_graph(2)
SYM2 = make_graph(2, [(0, 1), (1, 0)])
ARC2 = make_graph(2, [(0, 1)])
_DEGENERATE_UNIT = {"parallel": EDGELESS2, "series": SYM2, "order": ARC2}


def is_F_graph(g: Structure, F) -> bool:
    """Every node of the decomposition uses a quotient in F; flat degenerate
    nodes count as nested compositions of the matching 2-vertex graph."""
    fam = F if isinstance(F, FamilyF) else FamilyF(F)
    for node in modular_decomposition(g).nodes():
        if node.kind == "leaf":
            continue
        need = _DEGENERATE_UNIT.get(node.kind, node.quotient)
        if need not in fam:
            return False
    return True


def tree_to_json(t: ModNode) -> dict:
    return t.to_json()


def random_graph(rng, n: int, p: float = 0.4, loops: bool = False, symmetric: bool = False) -> Structure:
    edges = []
    for u in range(n):
        for v in range(n):
            if (u != v or loops) and rng.random() < p:
                edges.append((u, v))
    return make_graph(n, edges, symmetric=symmetric)


def graph_sort_plain():
    return graph_sort()
