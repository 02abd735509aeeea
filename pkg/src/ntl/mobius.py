"""Numerics on PSL(2, C): normalization, KAK factorization, sphere action,
cross-ratios and the standard finite subgroups."""

from __future__ import annotations

import cmath
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import TOL


class SingularMatrix(ValueError):
    pass


class DegenerateTriple(ValueError):
    pass


class SaturationDiverged(RuntimeError):
    pass


class Unclassifiable(ValueError):
    pass


@dataclass(frozen=True)
class MobiusTransform:
    """A 2x2 complex matrix of determinant one, read modulo sign."""

    matrix: np.ndarray

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(np.eye(2, dtype=complex))

    @classmethod
    def diag(cls, a: float) -> "MobiusTransform":
        """``D(a)``: the map ``z -> a z``, normalized."""
        return normalize(np.array([[a, 0], [0, 1]], dtype=complex))

    def __matmul__(self, other: "MobiusTransform") -> "MobiusTransform":
        return MobiusTransform(self.matrix @ other.matrix)

    def inverse(self) -> "MobiusTransform":
        (a, b), (c, d) = self.matrix
        return MobiusTransform(np.array([[d, -b], [-c, a]], dtype=complex))

    def adjoint(self) -> "MobiusTransform":
        return MobiusTransform(self.matrix.conj().T)

    def in_su2(self, tol: float = TOL.su2) -> bool:
        return float(np.max(np.abs(self.matrix @ self.matrix.conj().T - np.eye(2)))) <= tol

    def entries(self) -> list[complex]:
        return [complex(x) for x in self.matrix.ravel()]


def normalize(m: Sequence[Sequence[complex]] | np.ndarray) -> MobiusTransform:
    """Scale a nonsingular matrix to determinant one."""
    arr = np.asarray(m, dtype=complex).reshape(2, 2)
    det = complex(np.linalg.det(arr))
    if abs(det) <= TOL.singular:
        raise SingularMatrix(f"|det| = {abs(det):.3e}")
    return MobiusTransform(arr / cmath.sqrt(det))


def psl_distance(g: MobiusTransform, h: MobiusTransform) -> float:
    """Max entry difference, minimized over the sign ambiguity."""
    return float(min(np.max(np.abs(g.matrix - h.matrix)), np.max(np.abs(g.matrix + h.matrix))))


def psl_equal(g: MobiusTransform, h: MobiusTransform, tol: float = TOL.psl_group) -> bool:
    return psl_distance(g, h) <= tol


@dataclass(frozen=True)
class KAKDecomposition:
    u: MobiusTransform
    a: float
    v: MobiusTransform

    def middle(self) -> MobiusTransform:
        return MobiusTransform.diag(self.a)

    def compose(self) -> MobiusTransform:
        return self.u @ self.middle() @ self.v


def _su2_gauge(w: np.ndarray) -> np.ndarray:
    """Bring a unitary eigenvector matrix into SU(2) with a real nonnegative
    top-left entry (or real positive top-right when that one vanishes)."""
    w = w / cmath.sqrt(complex(np.linalg.det(w)))
    if abs(w[0, 0]) > 1e-12:
        psi = -cmath.phase(w[0, 0])
    else:
        psi = cmath.phase(w[0, 1])
    return w @ np.diag([cmath.exp(1j * psi), cmath.exp(-1j * psi)])


def kak_decompose(g: MobiusTransform) -> KAKDecomposition:
    """``g = u · D(a) · v`` with ``u, v`` in SU(2) and ``0 < a <= 1``.

    ``h = (g g*)^{1/2}`` has eigenvalues ``r1 <= r2`` (the singular values of
    ``g``) and ``g = u · diag(r1, r2) · v``; in PSL the middle factor is
    ``z -> (r1/r2) z``, so ``a = r1/r2``. The factors come from one SVD,
    which stays accurate when ``g`` is badly conditioned. The remaining
    freedom (a diagonal phase moved between ``u`` and ``v``) is fixed by
    the gauge of :func:`_su2_gauge`.
    """
    m = g.matrix
    if g.in_su2():
        return KAKDecomposition(g, 1.0, MobiusTransform.identity())
    left, sv, right = np.linalg.svd(m)
    # numpy sorts singular values descending; put the small one first
    left, right = left[:, ::-1], right[::-1, :]
    u = _su2_gauge(left)
    # middle is diagonal, so v absorbs whatever phases u was given
    v = np.diag([1 / sv[1], 1 / sv[0]]) @ u.conj().T @ m
    a = float(sv[1] / sv[0])
    return KAKDecomposition(MobiusTransform(u), a, MobiusTransform(v))


def kak_residual(g: MobiusTransform, dec: KAKDecomposition) -> float:
    return psl_distance(dec.compose(), g)


@dataclass(frozen=True)
class SpherePoint:
    """Homogeneous coordinates ``[z : w]`` on CP^1; ``∞ = [1 : 0]``."""

    z: complex
    w: complex

    def __post_init__(self) -> None:
        if self.z == 0 and self.w == 0:
            raise ValueError("[0 : 0] is not a point")

    @classmethod
    def of(cls, x: complex | float) -> "SpherePoint":
        if isinstance(x, SpherePoint):
            return x
        if isinstance(x, float) and math.isinf(x) or (isinstance(x, complex) and cmath.isinf(x)):
            return cls(1 + 0j, 0j)
        return cls(complex(x), 1 + 0j)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(1 + 0j, 0j)

    def is_infinity(self, tol: float = 0.0) -> bool:
        return abs(self.w) <= tol * math.hypot(abs(self.z), abs(self.w))

    def to_complex(self) -> complex | float:
        if self.w == 0:
            return math.inf
        return self.z / self.w

    def unit_vector(self) -> np.ndarray:
        n2 = abs(self.z) ** 2 + abs(self.w) ** 2
        zw = self.z * self.w.conjugate()
        return np.array([2 * zw.real / n2, 2 * zw.imag / n2, (abs(self.z) ** 2 - abs(self.w) ** 2) / n2])

    def to_json(self) -> list:
        return [[self.z.real, self.z.imag], [self.w.real, self.w.imag]]


def chordal_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Half the Euclidean distance of the images on the unit sphere (in [0, 1])."""
    num = abs(p.z * q.w - p.w * q.z)
    return num / (math.hypot(abs(p.z), abs(p.w)) * math.hypot(abs(q.z), abs(q.w)))


def spherical_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Great-circle distance on the unit sphere."""
    return 2.0 * math.asin(min(1.0, chordal_distance(p, q)))


def apply(g: MobiusTransform, p: SpherePoint) -> SpherePoint:
    (a, b), (c, d) = g.matrix
    z = complex(a * p.z + b * p.w)
    w = complex(c * p.z + d * p.w)
    s = math.hypot(abs(z), abs(w))
    return SpherePoint(z / s, w / s)


def apply_arrays(g: MobiusTransform, z: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`apply` on homogeneous coordinate arrays."""
    (a, b), (c, d) = g.matrix
    z2 = a * z + b * w
    w2 = c * z + d * w
    s = np.sqrt(np.abs(z2) ** 2 + np.abs(w2) ** 2)
    return z2 / s, w2 / s


def _bracket(p: SpherePoint, q: SpherePoint) -> complex:
    return p.z * q.w - p.w * q.z


def cross_ratio(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint, p4: SpherePoint) -> SpherePoint:
    """Value at ``p4`` of the Möbius map sending ``(p1, p2, p3)`` to ``(0, 1, ∞)``."""
    p1, p2, p3, p4 = (SpherePoint.of(p) for p in (p1, p2, p3, p4))
    for x, y in ((p1, p2), (p1, p3), (p2, p3)):
        if spherical_distance(x, y) <= TOL.degenerate:
            raise DegenerateTriple("first three points must be distinct")
    num = _bracket(p4, p1) * _bracket(p2, p3)
    den = _bracket(p4, p3) * _bracket(p2, p1)
    if den == 0:
        return SpherePoint.infinity()
    # dividing through keeps chart values exact on the slice
    return SpherePoint(num / den, 1 + 0j)


def three_point_map(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> MobiusTransform:
    """The unique transform sending ``p1, p2, p3`` to ``0, 1, ∞``."""
    for x, y in ((p1, p2), (p1, p3), (p2, p3)):
        if spherical_distance(x, y) <= TOL.degenerate:
            raise DegenerateTriple("first three points must be distinct")
    k1 = _bracket(p2, p3)
    k2 = _bracket(p2, p1)
    m = np.array([[p1.w * k1, -p1.z * k1], [p3.w * k2, -p3.z * k2]], dtype=complex)
    return normalize(m)


def moment_height(p: SpherePoint) -> float:
    """``(|z|^2 - |w|^2) / (|z|^2 + |w|^2)``: -1 at 0, +1 at ∞."""
    a, b = abs(p.z) ** 2, abs(p.w) ** 2
    return (a - b) / (a + b)


def su2_from_axis_angle(axis: Sequence[float], angle: float) -> MobiusTransform:
    """Lift of the rotation by ``angle`` about ``axis`` to SU(2)."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    nx, ny, nz = n
    # exp(-i angle/2 n·σ), acting on [z : w] with z/w the stereographic coordinate
    m = np.array([[c - 1j * s * nz, -1j * s * (nx - 1j * ny)], [-1j * s * (nx + 1j * ny), c + 1j * s * nz]])
    return MobiusTransform(m)


def random_su2(rng: np.random.Generator) -> MobiusTransform:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a, b = complex(q[0], q[1]), complex(q[2], q[3])
    return MobiusTransform(np.array([[a, -b.conjugate()], [b, a.conjugate()]]))


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> MobiusTransform:
    while True:
        m = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) * scale
        if abs(np.linalg.det(m)) > 1e-3:
            return normalize(m)


# ---------------------------------------------------------------------------
# finite subgroups

EXCEPTIONAL_KINDS = ("tetrahedral", "octahedral", "icosahedral")
EXCEPTIONAL_ORDERS = {"tetrahedral": 12, "octahedral": 24, "icosahedral": 60}
EXCEPTIONAL_ORDER_STATS = {
    "tetrahedral": {1: 1, 2: 3, 3: 8},
    "octahedral": {1: 1, 2: 9, 3: 8, 4: 6},
    "icosahedral": {1: 1, 2: 15, 3: 20, 5: 24},
}
MAX_SATURATION = 10_000


@dataclass(frozen=True)
class FiniteSubgroupSample:
    elements: tuple[MobiusTransform, ...]

    @property
    def order(self) -> int:
        return len(self.elements)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "elements": [[[e.real, e.imag] for e in g.entries()] for g in self.elements],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteSubgroupSample":
        out = []
        for row in data["elements"]:
            vals = [complex(x[0], x[1]) if isinstance(x, list) else complex(x) for x in row]
            out.append(normalize(np.array(vals).reshape(2, 2)))
        return cls(tuple(out))


def _index_of(g: MobiusTransform, pool: Iterable[MobiusTransform]) -> int:
    for i, h in enumerate(pool):
        if psl_equal(g, h):
            return i
    return -1


def saturate(generators: Sequence[MobiusTransform], limit: int = MAX_SATURATION) -> FiniteSubgroupSample:
    """Close a generating set under products with a worklist."""
    elements = [MobiusTransform.identity()]
    work = list(elements)
    while work:
        g = work.pop(0)
        for s in generators:
            h = g @ s
            if _index_of(h, elements) < 0:
                elements.append(h)
                work.append(h)
                if len(elements) > limit:
                    raise SaturationDiverged(f"more than {limit} elements")
    return FiniteSubgroupSample(tuple(elements))


def _icosa_axes() -> tuple[np.ndarray, np.ndarray]:
    phi = (1 + math.sqrt(5)) / 2
    vertex = np.array([0.0, 1.0, phi])
    face = (np.array([0.0, 1.0, phi]) + np.array([0.0, -1.0, phi]) + np.array([phi, 0.0, 1.0])) / 3
    return vertex, face


def standard_finite_subgroup(kind: str, l: int | None = None) -> FiniteSubgroupSample:
    """``cyclic``/``dihedral`` (with ``l``) or one of the polyhedral rotation groups."""
    if kind == "cyclic":
        if not l or l < 1:
            raise ValueError("cyclic group needs l >= 1")
        r = MobiusTransform(np.diag([cmath.exp(1j * math.pi / l), cmath.exp(-1j * math.pi / l)]))
        return saturate([r])
    if kind == "dihedral":
        if not l or l < 1:
            raise ValueError("dihedral group needs l >= 1")
        r = MobiusTransform(np.diag([cmath.exp(1j * math.pi / l), cmath.exp(-1j * math.pi / l)]))
        flip = MobiusTransform(np.array([[0, 1j], [1j, 0]]))  # z -> 1/z
        return saturate([r, flip])
    if kind == "tetrahedral":
        return saturate([su2_from_axis_angle((1, 1, 1), 2 * math.pi / 3), su2_from_axis_angle((0, 0, 1), math.pi)])
    if kind == "octahedral":
        return saturate([su2_from_axis_angle((1, 1, 1), 2 * math.pi / 3), su2_from_axis_angle((0, 0, 1), math.pi / 2)])
    if kind == "icosahedral":
        vertex, face = _icosa_axes()
        return saturate([su2_from_axis_angle(vertex, 2 * math.pi / 5), su2_from_axis_angle(face, 2 * math.pi / 3)])
    raise ValueError(f"unknown kind {kind!r}")


def element_order(g: MobiusTransform, limit: int = MAX_SATURATION) -> int:
    ident = MobiusTransform.identity()
    p = g
    for k in range(1, limit + 1):
        if psl_equal(p, ident):
            return k
        p = p @ g
    raise Unclassifiable("element of infinite or huge order")


def element_orders(s: FiniteSubgroupSample) -> list[int]:
    return [element_order(g) for g in s.elements]


@dataclass(frozen=True)
class Classification:
    kind: str
    m: int | None
    order: int
    element_orders: dict[int, int]

    def label(self) -> str:
        return f"{self.kind}({self.m})" if self.m is not None else self.kind

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.m,
            "label": self.label(),
            "order": self.order,
            "element_orders": {str(k): v for k, v in sorted(self.element_orders.items())},
        }


def check_closure(s: FiniteSubgroupSample) -> bool:
    els = s.elements
    if _index_of(MobiusTransform.identity(), els) < 0:
        return False
    for g in els:
        if _index_of(g.inverse(), els) < 0:
            return False
        for h in els:
            if _index_of(g @ h, els) < 0:
                return False
    return True


def classify_finite_subgroup(s: FiniteSubgroupSample) -> Classification:
    """Identify a finite subgroup up to isomorphism from its element orders.

    Cyclic when some element has full order; dihedral of order ``2m`` when an
    element of order ``m`` exists (``m >= 2``) and every element outside its
    cyclic subgroup is an involution inverting it; otherwise the order and
    element-order multiset must match one of the polyhedral groups.
    """
    n = s.order
    orders = element_orders(s)
    stats = dict(Counter(orders))
    if n in orders:
        return Classification("cyclic", n, n, stats)
    if n % 2 == 0 and n >= 4:
        m = n // 2
        for i, r in enumerate(s.elements):
            if orders[i] != m:
                continue
            powers = [MobiusTransform.identity()]
            for _ in range(m - 1):
                powers.append(powers[-1] @ r)
            outside = [g for g in s.elements if _index_of(g, powers) < 0]
            r_inv = r.inverse()
            if len(outside) == m and all(
                element_order(g) == 2 and psl_equal(g @ r @ g.inverse(), r_inv) for g in outside
            ):
                return Classification("dihedral", m, n, stats)
            break
    for name in EXCEPTIONAL_KINDS:
        if n == EXCEPTIONAL_ORDERS[name] and stats == EXCEPTIONAL_ORDER_STATS[name]:
            return Classification(name, None, n, stats)
    raise Unclassifiable(f"order {n} with element orders {stats}")
