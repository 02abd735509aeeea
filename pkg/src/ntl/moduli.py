"""Special-point configurations, the multi-cross-ratio chart and the slice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .config import TOL
from .mobius import (
    DegenerateTriple,
    MobiusTransform,
    SpherePoint,
    apply,
    cross_ratio,
    normalize,
    psl_distance,
    spherical_distance,
    three_point_map,
)
from .tree_core import LabeledTree
from .tree_order import LabeledOrder, SpecialPoint, order_from_labeling


class DegenerateConfig(ValueError):
    pass


class InvalidCoordinates(ValueError):
    pass


class MissingDoubleValue(KeyError):
    pass


ZERO = SpherePoint(0j, 1 + 0j)
ONE = SpherePoint(1 + 0j, 1 + 0j)
INF = SpherePoint.infinity()


def _same(p: SpherePoint, q: SpherePoint) -> bool:
    return p.z * q.w == p.w * q.z


@dataclass(frozen=True)
class SpecialPointConfig:
    """Ordered special points on every component of a stable curve."""

    labeled: LabeledTree
    ordering: LabeledOrder
    points: dict[int, tuple[SpherePoint, ...]]

    def __post_init__(self) -> None:
        for v, tags in self.ordering.special_points.items():
            pts = self.points.get(v)
            if pts is None or len(pts) != len(tags):
                raise DegenerateConfig(f"vertex {v} needs {len(tags)} special points")
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    if spherical_distance(pts[i], pts[j]) <= TOL.distinct:
                        raise DegenerateConfig(f"special points {i + 1} and {j + 1} on vertex {v} collide")

    @classmethod
    def build(cls, lt: LabeledTree, points: Mapping[int, Sequence]) -> "SpecialPointConfig":
        order = order_from_labeling(lt)
        pts = {int(v): tuple(SpherePoint.of(p) for p in ps) for v, ps in points.items()}
        return cls(lt, order, pts)

    def tags(self, v: int) -> tuple[SpecialPoint, ...]:
        return self.ordering.special_points[v]

    @property
    def is_slice(self) -> bool:
        return all(
            _same(ps[0], ZERO) and _same(ps[1], ONE) and _same(ps[2], INF) for ps in self.points.values()
        )

    def point_for(self, v: int, tag: SpecialPoint) -> SpherePoint:
        return self.points[v][self.tags(v).index(tag)]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "labeled_tree": self.labeled.to_json(),
            "points": {
                str(v): [{"role": tag.to_json(), "point": p.to_json()} for tag, p in zip(self.tags(v), ps)]
                for v, ps in sorted(self.points.items())
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SpecialPointConfig":
        lt = LabeledTree.from_json(data["labeled_tree"])
        pts = {}
        for v, entries in data["points"].items():
            row = []
            for e in entries:
                (zr, zi), (wr, wi) = e["point"] if isinstance(e, dict) else e
                row.append(SpherePoint(complex(zr, zi), complex(wr, wi)))
            pts[int(v)] = row
        return cls.build(lt, pts)


CrossRatioCoordinates = dict[int, dict[int, SpherePoint]]


def chart(config: SpecialPointConfig) -> CrossRatioCoordinates:
    """``w_vi = (p_v1 : p_v2 : p_v3 : p_vi)`` for every vertex and ``i > 3`` (1-based)."""
    out: CrossRatioCoordinates = {}
    for v, ps in sorted(config.points.items()):
        try:
            out[v] = {i: cross_ratio(ps[0], ps[1], ps[2], ps[i - 1]) for i in range(4, len(ps) + 1)}
        except DegenerateTriple as exc:
            raise DegenerateConfig(str(exc)) from exc
    return out


def h_t_act(config: SpecialPointConfig, g: Mapping[int, MobiusTransform]) -> SpecialPointConfig:
    """Apply one transform per component; roles stay attached to their points."""
    if set(g) != set(config.points):
        raise ValueError("need exactly one transform per vertex")
    pts = {v: tuple(apply(g[v], p) for p in ps) for v, ps in config.points.items()}
    return SpecialPointConfig(config.labeled, config.ordering, pts)


def slice_transform_linear(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> MobiusTransform:
    """Second solve of the 3-point interpolation: the kernel of ``[g p_i, q_i] = 0``."""
    rows = []
    for p, q in ((p1, ZERO), (p2, ONE), (p3, INF)):
        # g = [[a, b], [c, d]]; (a z + b w) q_w - (c z + d w) q_z = 0
        rows.append([p.z * q.w, p.w * q.w, -p.z * q.z, -p.w * q.z])
    _, _, vh = np.linalg.svd(np.array(rows, dtype=complex))
    return normalize(vh[-1].conj().reshape(2, 2))


def to_slice(config: SpecialPointConfig) -> tuple[SpecialPointConfig, dict[int, MobiusTransform]]:
    """Move every component so its first three special points sit at 0, 1, ∞.

    The per-vertex transform is unique; a second, independent solve is
    compared against it before returning.
    """
    moves: dict[int, MobiusTransform] = {}
    for v, ps in config.points.items():
        try:
            g = three_point_map(ps[0], ps[1], ps[2])
        except DegenerateTriple as exc:
            raise DegenerateConfig(str(exc)) from exc
        if psl_distance(g, slice_transform_linear(ps[0], ps[1], ps[2])) > TOL.slice_rigidity * max(
            1.0, float(np.max(np.abs(g.matrix)))
        ):
            raise AssertionError(f"slice transform for vertex {v} is not unique")
        moves[v] = g
    moved = h_t_act(config, moves)
    snapped = {v: (ZERO, ONE, INF) + ps[3:] for v, ps in moved.points.items()}
    return SpecialPointConfig(config.labeled, config.ordering, snapped), moves


def reconstruct_from_chart(lt: LabeledTree, coords: Mapping[int, Mapping[int, object]]) -> SpecialPointConfig:
    """The slice configuration with ``p_vi = w_vi`` for ``i > 3``."""
    order = order_from_labeling(lt)
    pts: dict[int, tuple[SpherePoint, ...]] = {}
    for v, tags in order.special_points.items():
        given = coords.get(v, {})
        expected = list(range(4, len(tags) + 1))
        if sorted(given) != expected:
            raise InvalidCoordinates(f"vertex {v} needs coordinates for indices {expected}")
        row = [ZERO, ONE, INF]
        for i in expected:
            p = SpherePoint.of(given[i])
            for q in (ZERO, ONE, INF):
                if spherical_distance(p, q) <= TOL.distinct:
                    raise InvalidCoordinates(f"w[{v}][{i}] hits one of 0, 1, ∞")
            row.append(p)
        pts[v] = tuple(row)
    try:
        return SpecialPointConfig(lt, order, pts)
    except DegenerateConfig as exc:
        raise InvalidCoordinates(str(exc)) from exc


def coordinates_to_json(coords: CrossRatioCoordinates) -> dict:
    out: dict = {}
    for v, row in sorted(coords.items()):
        out[str(v)] = {}
        for i, p in sorted(row.items()):
            val = p.to_complex()
            out[str(v)][str(i)] = "inf" if val == float("inf") else [val.real, val.imag]
    return out


def check_nodal_gluing(
    lt: LabeledTree, values_at_doubles: Mapping[tuple[int, int], Sequence[float]], tol: float = TOL.gluing
) -> tuple[bool, list[tuple[int, int]]]:
    """``f_v(d_vu) = f_u(d_uv)`` on every edge; returns the mismatched edges."""
    bad = []
    for u, v in lt.tree.edges:
        for key in ((u, v), (v, u)):
            if key not in values_at_doubles:
                raise MissingDoubleValue(f"no value for double point {key}")
        a = np.asarray(values_at_doubles[(u, v)], dtype=float)
        b = np.asarray(values_at_doubles[(v, u)], dtype=float)
        if float(np.max(np.abs(a - b))) > tol:
            bad.append((u, v))
    return not bad, bad


def random_config(lt: LabeledTree, rng: np.random.Generator, spread: float = 2.0) -> SpecialPointConfig:
    """Special points drawn from a complex Gaussian, redrawn on near-collisions."""
    order = order_from_labeling(lt)
    pts = {}
    for v, tags in order.special_points.items():
        while True:
            row = tuple(SpherePoint.of(complex(*rng.normal(scale=spread, size=2))) for _ in tags)
            ok = all(
                spherical_distance(row[i], row[j]) > 1e-3 for i in range(len(row)) for j in range(i + 1, len(row))
            )
            if ok:
                pts[v] = row
                break
    return SpecialPointConfig(lt, order, pts)
