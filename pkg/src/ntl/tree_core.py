"""Finite trees, n-labeled trees, enumeration and minimal stabilizations."""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

MAX_ENUM_VERTICES = 10


class TreeError(ValueError):
    """Base class for invalid tree input."""


class Disconnected(TreeError):
    pass


class HasCycle(TreeError):
    pass


class SelfLoop(TreeError):
    pass


class DuplicateEdge(TreeError):
    pass


class SizeLimitExceeded(ValueError):
    pass


Edge = tuple[int, int]


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Tree:
    """A finite simplicial tree on integer vertex ids.

    Build through :func:`validate_tree` (or :meth:`Tree.from_edges`) so the
    invariants are checked; the constructor itself trusts its input.
    """

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]

    @classmethod
    def from_edges(cls, vertices: Iterable[int], edges: Iterable[Sequence[int]]) -> "Tree":
        return validate_tree(vertices, edges)

    @classmethod
    def path(cls, n: int) -> "Tree":
        return cls(tuple(range(n)), tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def star(cls, leaves: int) -> "Tree":
        return cls(tuple(range(leaves + 1)), tuple((0, i) for i in range(1, leaves + 1)))

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def __len__(self) -> int:
        return len(self.vertices)

    def valence(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edge_set

    def path_between(self, a: int, b: int) -> list[int]:
        """Vertices of the unique chain from ``a`` to ``b`` (inclusive)."""
        parent = {a: a}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for y in self.adjacency[x]:
                if y not in parent:
                    parent[y] = x
                    queue.append(y)
        chain = [b]
        while chain[-1] != a:
            chain.append(parent[chain[-1]])
        return chain[::-1]

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Tree":
        return validate_tree(data["vertices"], data["edges"])


def validate_tree(vertices: Iterable[int], edges: Iterable[Sequence[int]]) -> Tree:
    """Check that ``(vertices, edges)`` is a tree and return it.

    Raises one of :class:`SelfLoop`, :class:`DuplicateEdge`, :class:`HasCycle`
    or :class:`Disconnected`, naming the violated invariant.
    """
    vs = sorted({int(v) for v in vertices})
    if not vs:
        raise TreeError("a tree needs at least one vertex")
    vset = set(vs)
    seen: set[Edge] = set()
    for raw in edges:
        u, v = int(raw[0]), int(raw[1])
        if u not in vset or v not in vset:
            raise TreeError(f"edge ({u}, {v}) uses an unknown vertex")
        if u == v:
            raise SelfLoop(f"self loop at vertex {u}")
        e = _edge(u, v)
        if e in seen:
            raise DuplicateEdge(f"edge {e} listed twice")
        seen.add(e)

    # union-find: the first edge closing a loop is a cycle
    root = {v: v for v in vs}

    def find(x: int) -> int:
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for u, v in sorted(seen):
        ru, rv = find(u), find(v)
        if ru == rv:
            raise HasCycle(f"edge ({u}, {v}) closes a cycle")
        root[ru] = rv
    if len({find(v) for v in vs}) > 1:
        raise Disconnected(f"{len({find(v) for v in vs})} connected components")
    return Tree(tuple(vs), tuple(sorted(seen)))


def tips(t: Tree) -> list[int]:
    """Vertices of valence one; the lone vertex of a one-vertex tree is its own tip."""
    if len(t.vertices) == 1:
        return [t.vertices[0]]
    return [v for v in t.vertices if t.valence(v) == 1]


def centers(t: Tree) -> list[int]:
    """One or two central vertices, found by peeling leaves."""
    deg = {v: t.valence(v) for v in t.vertices}
    layer = [v for v in t.vertices if deg[v] <= 1]
    remaining = len(t.vertices)
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for u in t.adjacency[v]:
                deg[u] -= 1
                if deg[u] == 1:
                    nxt.append(u)
        layer = nxt
    return sorted(layer)


def rooted_codes(t: Tree, root: int) -> dict[int, str]:
    """AHU encodings of every subtree hanging below ``root``."""
    codes: dict[int, str] = {}
    order: list[tuple[int, int]] = []
    stack = [(root, -1)]
    parent: dict[int, int] = {}
    while stack:
        v, p = stack.pop()
        parent[v] = p
        order.append((v, p))
        for u in t.adjacency[v]:
            if u != p:
                stack.append((u, v))
    for v, p in reversed(order):
        kids = sorted(codes[u] for u in t.adjacency[v] if u != p)
        codes[v] = "(" + "".join(kids) + ")"
    return codes


def canonical_form(t: Tree) -> str:
    """Center-rooted AHU string; equal exactly for isomorphic trees."""
    return min(rooted_codes(t, c)[c] for c in centers(t))


def tree_from_code(code: str) -> Tree:
    """Rebuild a tree from an AHU string, numbering vertices in preorder."""
    edges: list[Edge] = []
    stack: list[int] = []
    nxt = 0
    for ch in code:
        if ch == "(":
            if stack:
                edges.append((stack[-1], nxt))
            stack.append(nxt)
            nxt += 1
        else:
            stack.pop()
    return Tree(tuple(range(nxt)), tuple(sorted(edges)))


def enumerate_trees(v_max: int) -> list[Tree]:
    """One canonical tree per isomorphism class, for every size 1..v_max.

    Ordered by vertex count, then by canonical string. Trees are grown by
    attaching a leaf to each class of the previous size.
    """
    if v_max < 1:
        raise ValueError("v_max must be positive")
    if v_max > MAX_ENUM_VERTICES:
        raise SizeLimitExceeded(f"v_max={v_max} exceeds {MAX_ENUM_VERTICES}")
    return list(_enumerate(v_max))


@lru_cache(maxsize=None)
def _enumerate(v_max: int) -> tuple[Tree, ...]:
    level = {canonical_form(Tree((0,), ())): Tree((0,), ())}
    out = [tree_from_code(c) for c in sorted(level)]
    for n in range(2, v_max + 1):
        nxt: dict[str, Tree] = {}
        for t in level.values():
            for v in t.vertices:
                grown = Tree(t.vertices + (n - 1,), tuple(sorted(t.edges + ((v, n - 1),))))
                nxt.setdefault(canonical_form(grown), grown)
        level = nxt
        out.extend(tree_from_code(c) for c in sorted(level))
    return tuple(out)


def trees_with(n_vertices: int) -> list[Tree]:
    return [t for t in enumerate_trees(n_vertices) if len(t) == n_vertices]


@dataclass(frozen=True)
class LabeledTree:
    """A tree with a label map ``{1..n} -> vertices``."""

    tree: Tree
    n: int
    labels: tuple[int, ...]  # labels[i - 1] is the vertex carrying label i

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.labels) != self.n:
            raise ValueError("label map must be defined on all of 1..n")
        vset = set(self.tree.vertices)
        bad = [v for v in self.labels if v not in vset]
        if bad:
            raise ValueError(f"labels point at unknown vertices {bad}")

    @classmethod
    def from_mapping(cls, tree: Tree, mapping: Mapping[int, int]) -> "LabeledTree":
        n = len(mapping)
        return cls(tree, n, tuple(int(mapping[i]) for i in range(1, n + 1)))

    def label(self, i: int) -> int:
        return self.labels[i - 1]

    def preimage(self, v: int) -> list[int]:
        return [i for i, w in enumerate(self.labels, start=1) if w == v]

    @cached_property
    def label_counts(self) -> dict[int, int]:
        c = Counter(self.labels)
        return {v: c.get(v, 0) for v in self.tree.vertices}

    def is_stable_at(self, v: int) -> bool:
        return self.tree.valence(v) + self.label_counts[v] >= 3

    def to_json(self) -> dict:
        data = self.tree.to_json()
        data["n"] = self.n
        data["labels"] = {str(i): v for i, v in enumerate(self.labels, start=1)}
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "LabeledTree":
        tree = Tree.from_json(data)
        labels = {int(k): int(v) for k, v in data["labels"].items()}
        if sorted(labels) != list(range(1, int(data["n"]) + 1)):
            raise ValueError("labels must cover 1..n")
        return cls.from_mapping(tree, labels)


def is_stable_labeled(lt: LabeledTree) -> bool:
    return all(lt.is_stable_at(v) for v in lt.tree.vertices)


@dataclass(frozen=True)
class NodalShape:
    """Per-vertex double-point / marked-point / special-point counts."""

    labeled: LabeledTree
    doubles: dict[int, int] = field(init=False)
    marked: dict[int, int] = field(init=False)

    def __post_init__(self) -> None:
        t = self.labeled.tree
        object.__setattr__(self, "doubles", {v: t.valence(v) for v in t.vertices})
        object.__setattr__(self, "marked", dict(self.labeled.label_counts))

    @property
    def special(self) -> dict[int, int]:
        return {v: self.doubles[v] + self.marked[v] for v in self.doubles}


def forced_label_counts(t: Tree) -> dict[int, int]:
    """Labels a minimal stabilization must put on each vertex."""
    return {v: max(0, 3 - t.valence(v)) for v in t.vertices}


def iter_stabilizing_labelings(t: Tree) -> Iterator[LabeledTree]:
    """Every label map with ``Val(v) + #L^-1(v) = 3`` on unstable vertices.

    Stable vertices (valence >= 3) carry no labels. Maps come out in
    lexicographic order of ``(L(1), ..., L(n))``; the count grows like a
    multinomial, so this is only practical for small trees.
    """
    counts = forced_label_counts(t)
    n = sum(counts.values())
    slots = [v for v in t.vertices for _ in range(counts[v])]
    for perm in _multiset_permutations(slots):
        yield LabeledTree(t, n, perm)


def canonical_stabilization(t: Tree) -> LabeledTree:
    """The forced label distribution with ``1..n`` handed out in vertex-id order."""
    return next(iter_stabilizing_labelings(t))


def minimal_stabilizations(t: Tree) -> list[LabeledTree]:
    """Minimal stabilizations up to renaming the labels.

    The number of labels on each vertex is forced (``3 - Val`` on unstable
    vertices, none elsewhere), so after fixing the label order there is
    exactly one. :func:`iter_stabilizing_labelings` lists all label maps.
    """
    return [canonical_stabilization(t)]


def count_stabilizing_labelings(t: Tree) -> int:
    """Length of :func:`iter_stabilizing_labelings` without enumerating it."""
    counts = forced_label_counts(t)
    total = 1
    remaining = sum(counts.values())
    for k in counts.values():
        total *= _binom(remaining, k)
        remaining -= k
    return total


def stabilization_defect(lt: LabeledTree) -> int:
    """``(n - 3) - (#E + sum over stable v of (#d_v - 3))``; zero when minimal."""
    t = lt.tree
    rhs = len(t.edges) + sum(t.valence(v) - 3 for v in t.vertices if t.valence(v) >= 3)
    return (lt.n - 3) - rhs


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def _multiset_permutations(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Distinct permutations of a sorted multiset, lexicographic."""
    a = sorted(items)
    if not a:
        yield ()
        return
    while True:
        yield tuple(a)
        i = len(a) - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = len(a) - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = reversed(a[i + 1 :])


def relabel(t: Tree, mapping: Mapping[int, int]) -> Tree:
    """Copy of ``t`` with vertex ``v`` renamed ``mapping[v]``."""
    return Tree(
        tuple(sorted(mapping[v] for v in t.vertices)),
        tuple(sorted(_edge(mapping[u], mapping[v]) for u, v in t.edges)),
    )


def all_vertex_maps(t1: Tree, t2: Tree) -> Iterator[dict[int, int]]:
    """Every map ``V(t1) -> V(t2)``; only sensible for a handful of vertices."""
    for images in itertools.product(t2.vertices, repeat=len(t1.vertices)):
        yield dict(zip(t1.vertices, images))
