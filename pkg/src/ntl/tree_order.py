"""Total orders on vertices and edges induced by an order on the tips."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .tree_core import LabeledTree, Tree, is_stable_labeled, tips
from .tree_morphism import Contraction


class NotATipPermutation(ValueError):
    pass


class IncompatibleOrder(RuntimeError):
    pass


class InitialTipLost(ValueError):
    """The vertex holding rank 0 after a contraction is no longer a tip."""


class UnstableLabeledTree(ValueError):
    pass


class TipWithoutLabel(ValueError):
    pass


@dataclass(frozen=True)
class TotalOrder:
    tree: Tree
    ordered_tips: tuple[int, ...]
    vertex_order: tuple[int, ...]
    edge_order: tuple[tuple[int, int], ...]

    @property
    def vertex_rank(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertex_order)}

    @property
    def edge_rank(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edge_order)}

    def to_json(self) -> dict:
        return {
            "ordered_tips": list(self.ordered_tips),
            "vertex_order": list(self.vertex_order),
            "edge_order": [list(e) for e in self.edge_order],
        }


def total_order_from_tip_order(t: Tree, ordered_tips: Sequence[int]) -> TotalOrder:
    """Walk the chain from the first tip to the second, then for each later
    tip append the part of its chain from the initial tip not seen yet."""
    ordered = tuple(ordered_tips)
    if sorted(ordered) != sorted(tips(t)):
        raise NotATipPermutation(f"{ordered} is not an ordering of the tips {tips(t)}")
    return _walk(t, ordered[0], ordered[1:], ordered)


def _walk(t: Tree, t0: int, later: Sequence[int], ordered: tuple[int, ...]) -> TotalOrder:
    vertices = [t0]
    seen = {t0}
    edges: list[tuple[int, int]] = []
    for tk in later:
        chain = t.path_between(t0, tk)
        for a, b in zip(chain, chain[1:]):
            if b not in seen:
                seen.add(b)
                vertices.append(b)
                edges.append((min(a, b), max(a, b)))
    if len(vertices) != len(t.vertices):
        raise IncompatibleOrder("tip chains do not cover the tree")
    return TotalOrder(t, ordered, tuple(vertices), tuple(edges))


def induced_order_under_contraction(o: TotalOrder, c: Contraction, keep_initial: bool = True) -> TotalOrder:
    """Push a total order through the contraction ``c``.

    Each vertex of the contracted tree takes the least rank of its preimage,
    edges keep their rank, and the tips are ordered by rank. The result is
    re-derived from that tip order and must agree (``IncompatibleOrder``
    otherwise). If the merged vertex holds rank 0 but is no longer a tip it
    stays the initial vertex and ``ordered_tips`` lists the remaining tips;
    with ``keep_initial=False`` that case raises ``InitialTipLost`` instead.
    """
    if o.tree != c.source:
        raise ValueError("order and contraction live on different trees")
    v, u = c.contracted_edge
    rank = o.vertex_rank
    fmap = c.map.vertex_map
    res = c.result
    new_rank: dict[int, int] = {}
    for x, r in rank.items():
        y = fmap[x]
        new_rank[y] = min(new_rank.get(y, r), r)
    vorder = tuple(sorted(res.vertices, key=new_rank.__getitem__))
    if vorder[0] not in tips(res) and not keep_initial:
        raise InitialTipLost(f"merged vertex {vorder[0]} heads the order but is not a tip")

    erank = o.edge_rank
    edge_from: dict[tuple[int, int], int] = {}
    for (a, b), r in erank.items():
        if {a, b} == {u, v}:
            continue
        fa, fb = fmap[a], fmap[b]
        edge_from[(min(fa, fb), max(fa, fb))] = r
    eorder = tuple(sorted(res.edges, key=edge_from.__getitem__))

    res_tips = set(tips(res))
    ordered_tips = tuple(x for x in vorder if x in res_tips)
    induced = TotalOrder(res, ordered_tips, vorder, eorder)
    if vorder[0] in res_tips:
        rederived = total_order_from_tip_order(res, ordered_tips)
    else:
        # the merged vertex stays initial even though it is no longer a tip
        rederived = _walk(res, vorder[0], ordered_tips, ordered_tips)
    if rederived.vertex_order != vorder or rederived.edge_order != eorder:
        raise IncompatibleOrder(f"contraction {c.contracted_edge} breaks the order")
    return induced


def tip_order_by_cases(o: TotalOrder, c: Contraction) -> tuple[int, ...]:
    """Tip order of the contracted tree read off tip by tip.

    A tip ``t_k`` other than the contracted pair survives in place; when
    ``t_k`` is absorbed its slot goes to the merged vertex if that vertex is
    a tip, and disappears otherwise.
    """
    res_tips = set(tips(c.result))
    out: list[int] = []
    for tk in o.ordered_tips:
        img = c.map.vertex_map[tk]
        if img in res_tips and img not in out:
            out.append(img)
    return tuple(out)


@dataclass(frozen=True)
class SpecialPoint:
    """A double point towards ``target`` or the marked point ``label``."""

    kind: str  # "d" or "x"
    value: int

    def to_json(self) -> str:
        return f"{self.kind}{self.value}"


@dataclass(frozen=True)
class LabeledOrder:
    order: TotalOrder
    special_points: dict[int, tuple[SpecialPoint, ...]]

    def slice_triple(self, v: int) -> tuple[SpecialPoint, ...]:
        return self.special_points[v][:3]

    def to_json(self) -> dict:
        data = self.order.to_json()
        data["special_points"] = {
            str(v): [p.to_json() for p in pts] for v, pts in sorted(self.special_points.items())
        }
        return data


def order_from_labeling(lt: LabeledTree) -> LabeledOrder:
    """Total order of a stable labeled tree plus ordered special points per vertex.

    Tips are ordered by their least label. On a vertex the double points
    come first (by rank of their edge), then the marked points ascending.
    """
    if not is_stable_labeled(lt):
        raise UnstableLabeledTree("order_from_labeling needs a stable labeled tree")
    t = lt.tree
    key: dict[int, int] = {}
    for tip in tips(t):
        pre = lt.preimage(tip)
        if not pre:
            raise TipWithoutLabel(f"tip {tip} carries no label")
        key[tip] = min(pre)
    order = total_order_from_tip_order(t, sorted(key, key=key.__getitem__))
    erank = order.edge_rank
    special: dict[int, tuple[SpecialPoint, ...]] = {}
    for v in t.vertices:
        nbrs = sorted(t.adjacency[v], key=lambda u: erank[(min(u, v), max(u, v))])
        pts = [SpecialPoint("d", u) for u in nbrs]
        pts += [SpecialPoint("x", i) for i in lt.preimage(v)]
        special[v] = tuple(pts)
    return LabeledOrder(order, special)
