"""Pre-morphisms, morphisms, flipped identifications and edge contractions."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping

from .tree_core import Tree, relabel, tips


class NotAPremorphism(ValueError):
    pass


class NotAMorphism(ValueError):
    pass


class NotSurjective(ValueError):
    pass


class NotAnEdge(ValueError):
    pass


@dataclass(frozen=True)
class TreeMorphism:
    domain: Tree
    codomain: Tree
    vertex_map: Mapping[int, int]

    def __post_init__(self) -> None:
        if set(self.vertex_map) != set(self.domain.vertices):
            raise ValueError("vertex map must be total on the domain")
        cod = set(self.codomain.vertices)
        if any(w not in cod for w in self.vertex_map.values()):
            raise ValueError("vertex map leaves the codomain")

    def __call__(self, v: int) -> int:
        return self.vertex_map[v]

    @cached_property
    def is_premorphism(self) -> bool:
        return is_premorphism(self)

    @cached_property
    def is_morphism(self) -> bool:
        return is_morphism(self)

    def fiber(self, w: int) -> list[int]:
        return [v for v in self.domain.vertices if self.vertex_map[v] == w]

    def is_surjective(self) -> bool:
        return set(self.vertex_map.values()) == set(self.codomain.vertices)

    def is_bijective(self) -> bool:
        return self.is_surjective() and len(self.domain) == len(self.codomain)

    def then(self, other: "TreeMorphism") -> "TreeMorphism":
        """``other ∘ self``."""
        return TreeMorphism(
            self.domain, other.codomain, {v: other.vertex_map[w] for v, w in self.vertex_map.items()}
        )

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "map": {str(v): w for v, w in sorted(self.vertex_map.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "TreeMorphism":
        dom = Tree.from_json(data["domain"])
        cod = Tree.from_json(data["codomain"])
        return cls(dom, cod, {int(k): int(v) for k, v in data["map"].items()})


def identity(t: Tree) -> TreeMorphism:
    return TreeMorphism(t, t, {v: v for v in t.vertices})


def is_premorphism(m: TreeMorphism) -> bool:
    f = m.vertex_map
    return all(f[u] == f[v] or m.codomain.has_edge(f[u], f[v]) for u, v in m.domain.edges)


def _connected(t: Tree, subset: set[int]) -> bool:
    start = next(iter(subset))
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in t.adjacency[x]:
            if y in subset and y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(subset)


def is_morphism(m: TreeMorphism) -> bool:
    """Pre-morphism whose nonempty fibers are all subtrees."""
    if not is_premorphism(m):
        return False
    fibers: dict[int, set[int]] = {}
    for v, w in m.vertex_map.items():
        fibers.setdefault(w, set()).add(v)
    return all(_connected(m.domain, fib) for fib in fibers.values())


def has_flipped_identification(m: TreeMorphism) -> tuple[bool, tuple[int, ...] | None]:
    """Look for a chain folded onto one edge at its middle.

    A flip is a chain ``a, b_1, ..., b_k, c`` (k >= 1) whose middle run maps
    to a single vertex ``y`` while both ends map to the same ``x != y``.
    With ``k = 1`` this is a length-two subchain folded at its middle vertex;
    longer runs are the same fold seen through contracted segments. The
    lexicographically least witness chain is returned.
    """
    if not is_premorphism(m):
        raise NotAPremorphism("flipped identifications are defined for pre-morphisms")
    t, f = m.domain, m.vertex_map
    best: tuple[int, ...] | None = None
    vs = t.vertices
    for i, a in enumerate(vs):
        for c in vs[i + 1 :]:
            if f[a] != f[c]:
                continue
            chain = t.path_between(a, c)
            inner = chain[1:-1]
            if not inner:
                continue
            ys = {f[b] for b in inner}
            if len(ys) == 1 and f[a] not in ys:
                # report the chain in the orientation that sorts first
                cand = min(tuple(chain), tuple(reversed(chain)))
                if best is None or cand < best:
                    best = cand
    return best is not None, best


@dataclass(frozen=True)
class Contraction:
    source: Tree
    contracted_edge: tuple[int, int]  # (v, u): u is collapsed into v
    result: Tree
    map: TreeMorphism


def contract_edge(t: Tree, v: int, u: int) -> Contraction:
    """Collapse the edge ``[vu]`` into ``v``; ``u``'s other neighbours move to ``v``."""
    if not t.has_edge(v, u):
        raise NotAnEdge(f"({v}, {u}) is not an edge")
    edges = set()
    for a, b in t.edges:
        if {a, b} == {u, v}:
            continue
        a2 = v if a == u else a
        b2 = v if b == u else b
        edges.add((min(a2, b2), max(a2, b2)))
    result = Tree(tuple(x for x in t.vertices if x != u), tuple(sorted(edges)))
    fmap = {x: (v if x == u else x) for x in t.vertices}
    return Contraction(t, (v, u), result, TreeMorphism(t, result, fmap))


def factor_surjective_morphism(m: TreeMorphism) -> tuple[list[Contraction], TreeMorphism]:
    """Write a surjective morphism as contractions after an isomorphism.

    Returns ``(contractions, iso)`` with ``iso: domain -> T~`` a relabelling
    and the contractions taking ``T~`` onto ``m.codomain`` so that
    ``contractions[-1].map ∘ ... ∘ contractions[0].map ∘ iso == m``.
    Each fiber keeps one representative, renamed to its image vertex; the
    other fiber vertices are collapsed into it leaves-first.
    """
    if not m.is_surjective():
        raise NotSurjective("morphism is not onto")
    if not is_morphism(m):
        raise NotAMorphism("map is not a morphism")
    dom, cod = m.domain, m.codomain
    reps = {}
    for w in cod.vertices:
        fib = m.fiber(w)
        reps[w] = w if w in fib else min(fib)
    rep_of = {reps[w]: w for w in reps}

    used = set(cod.vertices)
    fresh = max(set(dom.vertices) | used) + 1
    rename: dict[int, int] = {}
    for x in dom.vertices:
        if x in rep_of:
            rename[x] = rep_of[x]
    for x in dom.vertices:
        if x in rename:
            continue
        if x not in used:
            rename[x] = x
        else:
            rename[x] = fresh
            fresh += 1
        used.add(rename[x])

    current = relabel(dom, rename)
    iso = TreeMorphism(dom, current, rename)
    contractions: list[Contraction] = []
    for w in cod.vertices:
        root = w
        fib = {rename[x] for x in m.fiber(w)}
        # BFS inside the fiber from its representative, then peel farthest first
        depth = {root: 0}
        parent = {root: root}
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in current.adjacency[x]:
                if y in fib and y not in depth:
                    depth[y] = depth[x] + 1
                    parent[y] = x
                    queue.append(y)
        for x in sorted(fib - {root}, key=lambda y: (-depth[y], y)):
            c = contract_edge(current, parent[x], x)
            contractions.append(c)
            current = c.result
    return contractions, iso


def compose_factorization(contractions: list[Contraction], iso: TreeMorphism) -> dict[int, int]:
    out = dict(iso.vertex_map)
    for c in contractions:
        out = {v: c.map.vertex_map[w] for v, w in out.items()}
    return out


def iter_morphisms(t1: Tree, t2: Tree) -> Iterator[TreeMorphism]:
    """All morphisms ``t1 -> t2`` by backtracking along a BFS order of ``t1``."""
    order = _bfs_order(t1)
    parent = {order[0]: None}
    for v in order:
        for u in t1.adjacency[v]:
            if u not in parent:
                parent[u] = v
    assignment: dict[int, int] = {}

    def rec(i: int) -> Iterator[dict[int, int]]:
        if i == len(order):
            yield dict(assignment)
            return
        v = order[i]
        p = parent[v]
        if p is None:
            candidates = t2.vertices
        else:
            fp = assignment[p]
            candidates = (fp,) + t2.adjacency[fp]
        for w in candidates:
            assignment[v] = w
            yield from rec(i + 1)
        del assignment[v]

    for f in rec(0):
        m = TreeMorphism(t1, t2, f)
        if is_morphism(m):
            yield m


def morphisms_with_tip_values(t1: Tree, t2: Tree, tip_assignment: Mapping[int, int]) -> list[TreeMorphism]:
    """Every morphism ``t1 -> t2`` agreeing with ``tip_assignment`` on the tips.

    The list is not asserted to be short: isomorphisms are pinned down by
    their tip values, general morphisms need not be (two contractions of a
    three-vertex chain onto an edge share their tip values).
    """
    ts = tips(t1)
    if set(tip_assignment) != set(ts):
        raise ValueError("tip assignment must be defined exactly on the tips")
    return [m for m in iter_morphisms(t1, t2) if all(m(v) == tip_assignment[v] for v in ts)]


def _bfs_order(t: Tree) -> list[int]:
    root = t.vertices[0]
    seen = {root}
    order = [root]
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in t.adjacency[x]:
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    return order
