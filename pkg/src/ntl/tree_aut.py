"""Automorphism groups of trees, fixed-point sets and stabilizer structure."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Iterator, Mapping, Sequence

from .tree_core import LabeledTree, SizeLimitExceeded, Tree, centers, tips

MAX_AUT_VERTICES = 10

Perm = dict[int, int]


class NotAnAutomorphism(ValueError):
    pass


def is_automorphism(t: Tree, phi: Mapping[int, int]) -> bool:
    if set(phi) != set(t.vertices) or set(phi.values()) != set(t.vertices):
        return False
    return all(t.has_edge(phi[u], phi[v]) for u, v in t.edges)


def _key(t: Tree, phi: Mapping[int, int]) -> tuple[int, ...]:
    return tuple(phi[v] for v in t.vertices)


@dataclass(frozen=True)
class AutomorphismGroup:
    tree: Tree
    elements: tuple[Perm, ...]

    @property
    def order(self) -> int:
        return len(self.elements)

    def keys(self) -> set[tuple[int, ...]]:
        return {_key(self.tree, g) for g in self.elements}

    def check_axioms(self) -> bool:
        """Identity, closure, inverses, and every element preserving edges."""
        t = self.tree
        keys = self.keys()
        if len(keys) != len(self.elements):
            return False
        if tuple(t.vertices) not in keys:
            return False
        for g in self.elements:
            if not is_automorphism(t, g):
                return False
            inv = {w: v for v, w in g.items()}
            if _key(t, inv) not in keys:
                return False
        for g in self.elements:
            for h in self.elements:
                if _key(t, {v: g[h[v]] for v in t.vertices}) not in keys:
                    return False
        return True

    def generators(self) -> list[Perm]:
        """A small generating set chosen greedily in element order."""
        t = self.tree
        gens: list[Perm] = []
        span = {tuple(t.vertices)}
        for g in self.elements:
            if _key(t, g) in span:
                continue
            gens.append(g)
            span = _closure(t, gens)
        return gens


def _closure(t: Tree, gens: Sequence[Perm]) -> set[tuple[int, ...]]:
    idx = {v: i for i, v in enumerate(t.vertices)}
    start = tuple(t.vertices)
    seen = {start}
    frontier = [start]
    gkeys = [_key(t, g) for g in gens]
    while frontier:
        nxt = []
        for k in frontier:
            for g in gkeys:
                # (g ∘ k)(v) = g[k(v)]
                comp = tuple(g[idx[w]] for w in k)
                if comp not in seen:
                    seen.add(comp)
                    nxt.append(comp)
        frontier = nxt
    return seen


def _hanging_codes(t: Tree, root: int, parent: int | None, codes: dict[int, str]) -> str:
    stack = [(root, parent, False)]
    while stack:
        v, p, done = stack.pop()
        kids = [u for u in t.adjacency[v] if u != p]
        if done:
            codes[v] = "(" + "".join(sorted(codes[u] for u in kids)) + ")"
        else:
            stack.append((v, p, True))
            stack.extend((u, v, False) for u in kids)
    return codes[root]


def _rooted_isos(
    t: Tree, codes: Mapping[int, str], a: int, pa: int | None, b: int, pb: int | None
) -> Iterator[Perm]:
    """All isomorphisms of the subtree hanging at ``a`` onto the one at ``b``."""
    kids_a = [u for u in t.adjacency[a] if u != pa]
    kids_b = [u for u in t.adjacency[b] if u != pb]
    groups_a: dict[str, list[int]] = {}
    groups_b: dict[str, list[int]] = {}
    for u in kids_a:
        groups_a.setdefault(codes[u], []).append(u)
    for u in kids_b:
        groups_b.setdefault(codes[u], []).append(u)
    classes = sorted(groups_a)
    # per class: every bijection, each expanded into all child isomorphisms
    per_class = []
    for code in classes:
        A, B = groups_a[code], groups_b[code]
        sub = {(x, y): list(_rooted_isos(t, codes, x, a, y, b)) for x in A for y in B}
        options = []
        for perm in itertools.permutations(B):
            pieces = [sub[x, y] for x, y in zip(A, perm)]
            if all(len(p) == 1 for p in pieces):
                merged = {}
                for p in pieces:
                    merged.update(p[0])
                options.append(merged)
                continue
            for combo in itertools.product(*pieces):
                merged: Perm = {}
                for piece in combo:
                    merged.update(piece)
                options.append(merged)
        per_class.append(options)
    for combo in itertools.product(*per_class):
        out: Perm = {a: b}
        for piece in combo:
            out.update(piece)
        yield out


def automorphism_group(t: Tree) -> AutomorphismGroup:
    """All automorphisms, generated by matching equal subtree codes from the center."""
    if len(t.vertices) > MAX_AUT_VERTICES:
        raise SizeLimitExceeded(f"{len(t.vertices)} vertices exceeds {MAX_AUT_VERTICES}")
    cs = centers(t)
    codes: dict[int, str] = {}
    elements: list[Perm] = []
    if len(cs) == 1:
        (c,) = cs
        _hanging_codes(t, c, None, codes)
        elements = list(_rooted_isos(t, codes, c, None, c, None))
    else:
        c1, c2 = cs
        h1 = _hanging_codes(t, c1, c2, codes)
        h2 = _hanging_codes(t, c2, c1, codes)
        for g1 in _rooted_isos(t, codes, c1, c2, c1, c2):
            for g2 in _rooted_isos(t, codes, c2, c1, c2, c1):
                elements.append({**g1, **g2})
        if h1 == h2:
            for g1 in _rooted_isos(t, codes, c1, c2, c2, c1):
                for g2 in _rooted_isos(t, codes, c2, c1, c1, c2):
                    elements.append({**g1, **g2})
    elements.sort(key=lambda g: _key(t, g))
    return AutomorphismGroup(t, tuple(elements))


def labeled_automorphism_group(
    lt: LabeledTree, mode: str = "ordered", group: AutomorphismGroup | None = None
) -> AutomorphismGroup:
    """Ordered: ``phi ∘ L = L``. Unordered: ``phi ∘ L = L ∘ p`` for some permutation ``p``,
    which holds exactly when ``phi`` preserves the number of labels on each vertex."""
    full = group or automorphism_group(lt.tree)
    if mode == "ordered":
        keep = [g for g in full.elements if all(g[v] == v for v in lt.labels)]
    elif mode == "unordered":
        cnt = lt.label_counts
        keep = [g for g in full.elements if all(cnt[g[v]] == cnt[v] for v in lt.tree.vertices)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return AutomorphismGroup(lt.tree, tuple(keep))


@dataclass(frozen=True)
class FixedPointSet:
    fixed_vertices: frozenset[int]
    pointwise_fixed_edges: frozenset[tuple[int, int]]
    midpoint_only_edges: frozenset[tuple[int, int]]

    @property
    def dimension(self) -> int:
        return 1 if self.pointwise_fixed_edges else 0

    def is_single_vertex(self, v: int) -> bool:
        return self.fixed_vertices == {v} and not self.midpoint_only_edges

    def to_json(self) -> dict:
        return {
            "fixed_vertices": sorted(self.fixed_vertices),
            "pointwise_fixed_edges": sorted(map(list, self.pointwise_fixed_edges)),
            "midpoint_only_edges": sorted(map(list, self.midpoint_only_edges)),
        }


def fixed_point_set(t: Tree, phi: Mapping[int, int]) -> FixedPointSet:
    """Fixed locus of ``|phi|`` on the geometric realization of ``t``."""
    if not is_automorphism(t, phi):
        raise NotAnAutomorphism("map is not an automorphism of the tree")
    fv = frozenset(v for v in t.vertices if phi[v] == v)
    pointwise = frozenset(e for e in t.edges if e[0] in fv and e[1] in fv)
    swapped = frozenset(e for e in t.edges if phi[e[0]] == e[1] and phi[e[1]] == e[0])
    return FixedPointSet(fv, pointwise, swapped)


def involution_midpoint(t: Tree) -> tuple[int, int] | None:
    """The edge whose midpoint is fixed by some involution swapping its ends.

    Every automorphism is scanned; more than one such edge raises.
    """
    found: set[tuple[int, int]] = set()
    for g in automorphism_group(t).elements:
        if all(g[g[v]] == v for v in t.vertices):
            found |= fixed_point_set(t, g).midpoint_only_edges
    if len(found) > 1:
        raise AssertionError(f"several involution midpoints: {sorted(found)}")
    return next(iter(found), None)


def maximal_simple_chains(t: Tree) -> dict[int, list[list[int]]]:
    """Maximal simple chains from tips, keyed by the level-one vertex they reach."""
    out: dict[int, list[list[int]]] = {}
    if len(t.vertices) == 1:
        return out
    for u in tips(t):
        chain = [u]
        prev, cur = u, t.adjacency[u][0]
        while t.valence(cur) == 2:
            chain.append(cur)
            nxt = [w for w in t.adjacency[cur] if w != prev][0]
            prev, cur = cur, nxt
        chain.append(cur)
        if t.valence(cur) >= 3:
            out.setdefault(cur, []).append(chain)
    return out


def level_one_points(t: Tree) -> tuple[list[int], int | None]:
    """Level-one vertices and the least one reached by two maximal simple chains."""
    chains = maximal_simple_chains(t)
    pts = sorted(chains)
    witness = next((v for v in pts if len(chains[v]) >= 2), None)
    return pts, witness


def stabilizer(t: Tree, v0: int, group: AutomorphismGroup | None = None) -> AutomorphismGroup:
    if v0 not in t.vertices:
        raise ValueError(f"{v0} is not a vertex")
    g = group or automorphism_group(t)
    return AutomorphismGroup(t, tuple(p for p in g.elements if p[v0] == v0))


@dataclass(frozen=True)
class BranchClass:
    """Isomorphic branches at the base vertex (one cycle of the maximal element)."""

    representative_root: int
    roots: tuple[int, ...]
    branch_order: int  # |Γ^{T_k}_{v_k}|, root-fixing automorphisms of one branch
    structure: "StabilizerStructure"

    @property
    def multiplicity(self) -> int:
        return len(self.roots)

    def to_json(self) -> dict:
        return {
            "roots": list(self.roots),
            "multiplicity": self.multiplicity,
            "branch_order": self.branch_order,
            "branch": self.structure.to_json(),
        }


@dataclass(frozen=True)
class StabilizerStructure:
    base: int
    classes: tuple[BranchClass, ...] = field(default=())

    @property
    def order(self) -> int:
        total = 1
        for c in self.classes:
            total *= c.branch_order**c.multiplicity * factorial(c.multiplicity)
        return total

    def to_json(self) -> dict:
        return {"base": self.base, "order": self.order, "classes": [c.to_json() for c in self.classes]}


def _branch_structure(t: Tree, root: int, parent: int | None, codes: Mapping[int, str]) -> StabilizerStructure:
    groups: dict[str, list[int]] = {}
    for u in t.adjacency[root]:
        if u != parent:
            groups.setdefault(codes[u], []).append(u)
    classes = []
    for code in sorted(groups, key=lambda c: min(groups[c])):
        roots = tuple(sorted(groups[code]))
        sub = _branch_structure(t, roots[0], root, codes)
        classes.append(BranchClass(roots[0], roots, sub.order, sub))
    return StabilizerStructure(root, tuple(classes))


def decompose_stabilizer(t: Tree, v0: int) -> StabilizerStructure:
    """Group the branches at ``v0`` into isomorphism classes, recursively.

    ``structure.order`` evaluates ``prod_i |Γ^{T(i)}|^{l_i} l_i!``; compare it
    with ``stabilizer(t, v0).order`` for the brute-force side.
    """
    if v0 not in t.vertices:
        raise ValueError(f"{v0} is not a vertex")
    codes: dict[int, str] = {}
    _hanging_codes(t, v0, None, codes)
    return _branch_structure(t, v0, None, codes)


@dataclass(frozen=True)
class SingleFixedVertexReport:
    exists_witness: bool
    witness: Perm | None
    common_fixed_is_base: bool
    s_t_equals_stabilizer: bool

    def to_json(self) -> dict:
        return {
            "exists_witness": self.exists_witness,
            "witness": None if self.witness is None else {str(k): v for k, v in sorted(self.witness.items())},
            "common_fixed_is_base": self.common_fixed_is_base,
            "S_T_equals_stabilizer": self.s_t_equals_stabilizer,
        }


def common_fixed_point_set(t: Tree, group: AutomorphismGroup) -> FixedPointSet:
    fv = set(t.vertices)
    pw = set(t.edges)
    mid = set(t.edges)
    for g in group.elements:
        f = fixed_point_set(t, g)
        fv &= f.fixed_vertices
        pw &= f.pointwise_fixed_edges
        mid &= f.midpoint_only_edges | f.pointwise_fixed_edges
    return FixedPointSet(frozenset(fv), frozenset(pw), frozenset(mid - pw))


def single_fixed_vertex_analysis(t: Tree, v0: int) -> SingleFixedVertexReport:
    full = automorphism_group(t)
    gamma = stabilizer(t, v0, full)
    witness = next((g for g in gamma.elements if fixed_point_set(t, g).is_single_vertex(v0)), None)
    common = common_fixed_point_set(t, gamma)
    return SingleFixedVertexReport(
        exists_witness=witness is not None,
        witness=witness,
        common_fixed_is_base=common.is_single_vertex(v0) and not common.pointwise_fixed_edges,
        s_t_equals_stabilizer=gamma.order == full.order,
    )


@dataclass(frozen=True)
class ReparametrizationShape:
    factors: dict[int, str]  # vertex -> "G0" | "G1" | "G2"

    DIMENSIONS = {"G0": 6, "G1": 4, "G2": 2}

    @property
    def dimension(self) -> int:
        return sum(self.DIMENSIONS[k] for k in self.factors.values())

    def to_json(self) -> dict:
        return {"factors": {str(v): k for v, k in sorted(self.factors.items())}, "real_dimension": self.dimension}


def reparametrization_shape(lt: LabeledTree | Tree) -> ReparametrizationShape:
    """One point-stabilizer factor per component with at most two double points."""
    if isinstance(lt, LabeledTree):
        t, marks = lt.tree, lt.label_counts
    else:
        t, marks = lt, {}
    return ReparametrizationShape(
        {v: f"G{t.valence(v)}" for v in t.vertices if t.valence(v) + marks.get(v, 0) < 3}
    )


def admissible_image_kinds(l: int) -> list[dict]:
    """Finite subgroups of PSL(2,C) that contain an element of order ``l``.

    Cyclic(m) needs ``l | m``; Dihedral(m) needs ``l | m`` or ``l = 2``
    (the flips); the three polyhedral groups are kept when their element
    orders include ``l``.
    """
    from .mobius import EXCEPTIONAL_KINDS, element_orders, standard_finite_subgroup

    kinds: list[dict] = [{"kind": "cyclic", "m_multiple_of": l}]
    kinds.append({"kind": "dihedral", "m_multiple_of": 1 if l <= 2 else l})
    for name in EXCEPTIONAL_KINDS:
        if l in set(element_orders(standard_finite_subgroup(name))):
            kinds.append({"kind": name})
    return kinds


def realizable_symmetry_report(t: Tree, v0: int) -> list[dict]:
    structure = decompose_stabilizer(t, v0)
    return [
        {"roots": list(c.roots), "cycle_length": c.multiplicity, "admissible": admissible_image_kinds(c.multiplicity)}
        for c in structure.classes
    ]
