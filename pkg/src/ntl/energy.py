"""Discretized maps S^2 -> R^m, Fubini-Study quadrature and the energy experiments.

The sphere is the round unit sphere (total area 4π) with ``[z : w]``
sent to ``(2 z w̄, |z|^2 - |w|^2) / (|z|^2 + |w|^2)``; ``0`` is the south
pole and ``∞`` the north pole. Samples sit at cell centres of a
latitude-longitude grid with ``N`` longitudes and ``N/2`` latitude rows,
plus one value at each pole for interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import TOL
from .mobius import MobiusTransform, SpherePoint, apply_arrays, kak_decompose, random_su2
from .tree_core import LabeledTree

Formula = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NonFiniteValue(ValueError):
    pass


class ConstantMap(ValueError):
    pass


class NotConstant(ValueError):
    pass


@dataclass(frozen=True)
class SphereGrid:
    n: int

    def __post_init__(self) -> None:
        if self.n < 16 or self.n % 2:
            raise ValueError("resolution must be an even integer >= 16")

    @property
    def rows(self) -> int:
        return self.n // 2

    @property
    def dtheta(self) -> float:
        return math.pi / self.rows

    @property
    def dphi(self) -> float:
        return 2 * math.pi / self.n

    @property
    def theta(self) -> np.ndarray:
        return (np.arange(self.rows) + 0.5) * self.dtheta

    @property
    def phi(self) -> np.ndarray:
        return np.arange(self.n) * self.dphi

    @property
    def weights(self) -> np.ndarray:
        """Exact area of each cell, shape ``(rows, n)``."""
        edges = np.arange(self.rows + 1) * self.dtheta
        band = np.cos(edges[:-1]) - np.cos(edges[1:])
        return np.repeat((band * self.dphi)[:, None], self.n, axis=1)

    def homogeneous(self) -> tuple[np.ndarray, np.ndarray]:
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.cos(th / 2) * np.exp(1j * ph), np.sin(th / 2) + 0j * th


NORTH = (np.array([1 + 0j]), np.array([0j]))
SOUTH = (np.array([0j]), np.array([1 + 0j]))


def unit_vectors(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    n2 = np.abs(z) ** 2 + np.abs(w) ** 2
    zw = z * np.conj(w)
    return np.stack([2 * zw.real / n2, 2 * zw.imag / n2, (np.abs(z) ** 2 - np.abs(w) ** 2) / n2], axis=-1)


def height(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    a, b = np.abs(z) ** 2, np.abs(w) ** 2
    return (a - b) / (a + b)


def inclusion(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """The identity S^2 -> S^2 ⊂ R^3."""
    return unit_vectors(z, w)


def constant(value: Sequence[float]) -> Formula:
    c = np.asarray(value, dtype=float)

    def f(z: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.broadcast_to(c, np.shape(z) + c.shape).copy()

    return f


@dataclass(frozen=True)
class DiscretizedSphereMap:
    grid: SphereGrid
    values: np.ndarray  # (rows, n, m)
    north: np.ndarray  # (m,)
    south: np.ndarray  # (m,)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def evaluate(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Bilinear interpolation in (θ, φ); the pole rows close the θ range."""
        g = self.grid
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        az, aw = np.abs(z), np.abs(w)
        th = np.arctan2(2 * az * aw, az**2 - aw**2)
        ph = np.mod(np.angle(z * np.conj(w)), 2 * math.pi)
        nodes = np.concatenate([[0.0], g.theta, [math.pi]])
        rows = np.concatenate(
            [
                np.broadcast_to(self.north, (1, g.n, self.m)),
                self.values,
                np.broadcast_to(self.south, (1, g.n, self.m)),
            ]
        )
        i = np.clip(np.searchsorted(nodes, th, side="right") - 1, 0, len(nodes) - 2)
        t = ((th - nodes[i]) / (nodes[i + 1] - nodes[i]))[..., None]
        x = ph / g.dphi
        k = np.floor(x).astype(int) % g.n
        s = (x - np.floor(x))[..., None]
        k1 = (k + 1) % g.n
        lo = (1 - s) * rows[i, k] + s * rows[i, k1]
        hi = (1 - s) * rows[i + 1, k] + s * rows[i + 1, k1]
        return (1 - t) * lo + t * hi


def sample_map(formula: Formula, n: int) -> DiscretizedSphereMap:
    """Evaluate ``formula(z, w) -> (..., m)`` on the grid of resolution ``n``."""
    grid = SphereGrid(n)
    z, w = grid.homogeneous()
    vals = np.asarray(formula(z, w), dtype=float)
    if vals.ndim == 2:
        vals = vals[..., None]
    north = np.asarray(formula(*NORTH), dtype=float).reshape(-1)
    south = np.asarray(formula(*SOUTH), dtype=float).reshape(-1)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(north)) and np.all(np.isfinite(south))):
        raise NonFiniteValue("formula produced non-finite values on the grid")
    return DiscretizedSphereMap(grid, vals, north, south)


def energy_density(f: DiscretizedSphereMap) -> np.ndarray:
    """``½|df|^2`` per node by central differences in (θ, φ).

    The θ stencil at the first and last rows continues across the pole to
    the antipodal longitude, which keeps it centred.
    """
    g = f.grid
    v = f.values
    half = g.n // 2
    ghost_n = np.roll(v[:1], half, axis=1)
    ghost_s = np.roll(v[-1:], half, axis=1)
    ext = np.concatenate([ghost_n, v, ghost_s])
    d_theta = (ext[2:] - ext[:-2]) / (2 * g.dtheta)
    d_phi = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * g.dphi)
    sin_t = np.sin(g.theta)[:, None]
    sq = np.sum(d_theta**2, axis=-1) + np.sum(d_phi**2, axis=-1) / sin_t**2
    return 0.5 * sq


@dataclass(frozen=True)
class Region:
    """``whole``, the coordinate disc ``|z| <= R``, or the disc ``|z - x0| <= rho``."""

    kind: str = "whole"
    radius: float = math.inf
    center: complex = 0j

    @classmethod
    def whole(cls) -> "Region":
        return cls()

    @classmethod
    def disc(cls, radius: float) -> "Region":
        return cls("disc", float(radius))

    @classmethod
    def ball(cls, center: complex, radius: float) -> "Region":
        return cls("ball", float(radius), complex(center))

    def mask(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.kind == "whole":
            return np.ones(np.shape(z), dtype=bool)
        # |z/w - c| <= r  <=>  |z - c w| <= r |w|
        return np.abs(z - self.center * w) <= self.radius * np.abs(w)

    def complement_mask(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        return ~self.mask(z, w)


def energy(f: DiscretizedSphereMap, region: Region | None = None) -> float:
    region = region or Region.whole()
    z, w = f.grid.homogeneous()
    e = energy_density(f)
    return float(np.sum(e * f.weights * region.mask(z, w)))


def region_area(grid: SphereGrid, region: Region) -> float:
    z, w = grid.homogeneous()
    return float(np.sum(grid.weights * region.mask(z, w)))


def reparametrize(f: DiscretizedSphereMap, g: MobiusTransform) -> DiscretizedSphereMap:
    """``f ∘ g`` sampled at the grid nodes through interpolation of ``f``."""
    z, w = f.grid.homogeneous()
    gz, gw = apply_arrays(g, z, w)
    vals = f.evaluate(gz, gw)
    north = f.evaluate(*apply_arrays(g, *NORTH))[0]
    south = f.evaluate(*apply_arrays(g, *SOUTH))[0]
    return DiscretizedSphereMap(f.grid, vals, north, south)


def c0_distance(f1: DiscretizedSphereMap, f2: DiscretizedSphereMap) -> float:
    if f1.grid != f2.grid:
        raise ValueError("maps sampled on different grids")
    d = np.linalg.norm(f1.values - f2.values, axis=-1)
    return float(max(d.max(), np.linalg.norm(f1.north - f2.north), np.linalg.norm(f1.south - f2.south)))


def constant_value(f: DiscretizedSphereMap, tol: float = TOL.constant) -> np.ndarray:
    c = f.south
    dev = max(
        float(np.max(np.linalg.norm(f.values - c, axis=-1))), float(np.linalg.norm(f.north - c))
    )
    if dev > tol:
        raise NotConstant(f"map deviates from a constant by {dev:.3e}")
    return c


def constant_image_separation(
    f1: DiscretizedSphereMap, f2: DiscretizedSphereMap, eps1: float, eps2: float
) -> bool:
    """Two constant maps lie in disjoint orbit neighbourhoods iff their values
    differ by more than ``2 (eps1 + eps2)``; reparametrization never moves
    the image of a constant map."""
    c1, c2 = constant_value(f1), constant_value(f2)
    return float(np.linalg.norm(c1 - c2)) > 2 * (eps1 + eps2)


def energy_separation(
    f1: DiscretizedSphereMap, f2: DiscretizedSphereMap, rel: float = TOL.energy_rel, abs_: float = TOL.energy_abs
) -> float | None:
    """A level ``c`` strictly between the two energies, or ``None`` when the
    gap is within the quadrature bound ``rel * max(E1, E2) + abs_``."""
    e1, e2 = energy(f1), energy(f2)
    if abs(e1 - e2) <= rel * max(e1, e2) + abs_:
        return None
    return 0.5 * (e1 + e2)


def area_image_disc(g: MobiusTransform, radius: float, samples: int = 4096) -> float:
    """Fubini-Study area of ``g(B(R))`` from a boundary integral.

    On C the area form ``4 dx dy / (1 + |z|^2)^2`` is ``dα`` with
    ``α = 2 (x dy - y dx) / (1 + |z|^2)``. The pushed boundary circle is
    integrated with the periodic trapezoid rule; when ``g(B(R))`` contains
    ∞ the curve runs clockwise and the complement is added back.
    """
    (a, b), (c, d) = g.matrix
    t = np.arange(samples) * (2 * math.pi / samples)
    zeta = radius * np.exp(1j * t)
    den = c * zeta + d
    z = (a * zeta + b) / den
    dz = 1j * zeta / den**2
    integrand = 2 * np.imag(np.conj(z) * dz) / (1 + np.abs(z) ** 2)
    val = float(np.sum(integrand) * (2 * math.pi / samples))
    pole_inside = abs(c) > 0 and abs(-d / c) < radius
    return 4 * math.pi + val if pole_inside else val


def disc_area_closed_form(a: float, radius: float) -> float:
    """Area of ``D(a)(B(R))``: ``4π (aR)^2 / (1 + (aR)^2)``."""
    ar2 = (a * radius) ** 2
    return 4 * math.pi * ar2 / (1 + ar2)


# ---------------------------------------------------------------------------
# the properness experiment


@dataclass(frozen=True)
class PropernessExperimentConfig:
    radius: float = 1.0
    a_sequence: tuple[float, ...] = tuple(2.0**-n for n in range(1, 9))
    u: MobiusTransform = field(default_factory=MobiusTransform.identity)
    v: MobiusTransform = field(default_factory=MobiusTransform.identity)
    eps1: float = 0.1
    eps2: float = 0.1
    x0: complex = 1 + 0j
    rho: float = 0.3
    resolution: int = 256
    fit_from: int = 4  # first n (1-based) used in the decay fit
    exponent_window: tuple[float, float] = (1.8, 2.2)

    def __post_init__(self) -> None:
        a = self.a_sequence
        if not a or a[0] > 1 or any(x <= 0 for x in a) or any(y >= x for x, y in zip(a, a[1:])):
            raise ValueError("a_n must satisfy 0 < a_{n+1} < a_n <= 1")
        if self.radius <= 0 or self.rho <= 0:
            raise ValueError("radius and rho must be positive")
        if not 1 <= self.fit_from <= len(a) - 1:
            raise ValueError("fit window needs at least two points")

    def to_json(self) -> dict:
        return {
            "R": self.radius,
            "a_n": list(self.a_sequence),
            "eps1": self.eps1,
            "eps2": self.eps2,
            "x0": [self.x0.real, self.x0.imag],
            "rho": self.rho,
            "N": self.resolution,
            "fit_from": self.fit_from,
            "exponent_window": list(self.exponent_window),
        }


@dataclass(frozen=True)
class ExperimentReport:
    a_n: tuple[float, ...]
    energies: tuple[float, ...]
    image_areas: tuple[float, ...]
    delta2: float
    disc_energy: float
    gamma: float
    n2: int
    threshold: float
    exponent: float
    constant_fit: float
    monotone_from: int  # 1-based n from which E_n is nonincreasing
    below_from: int | None  # first n with E_n < threshold
    frame_image_radius: float
    concentration_disc_inside: bool
    verdict: str

    def to_json(self) -> dict:
        return {
            "a_n": list(self.a_n),
            "E_n": list(self.energies),
            "area_g_n_B_R": list(self.image_areas),
            "delta2": self.delta2,
            "disc_energy": self.disc_energy,
            "gamma": self.gamma,
            "N2": self.n2,
            "threshold": self.threshold,
            "exponent": self.exponent,
            "C_fit": self.constant_fit,
            "monotone_from": self.monotone_from,
            "below_threshold_from": self.below_from,
            "frame_image_radius": self.frame_image_radius,
            "concentration_disc_inside_B_R": self.concentration_disc_inside,
            "verdict": self.verdict,
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.a_n, self.energies))


def frame_image_radius(v: MobiusTransform, radius: float, samples: int = 512) -> float:
    """Largest ``|z|`` on ``v(B(R))``; infinite when the image contains ∞."""
    (a, b), (c, d) = v.matrix
    if abs(c) > 0 and abs(-d / c) <= radius:
        return math.inf
    zeta = radius * np.exp(2j * math.pi * np.arange(samples) / samples)
    return float(np.max(np.abs((a * zeta + b) / (c * zeta + d))))


def random_admissible_frame(
    rng: np.random.Generator, radius: float, max_image_radius: float
) -> MobiusTransform:
    """Haar-random SU(2) element with ``v(B(R))`` inside the disc of ``max_image_radius``.

    The decay argument needs ``D(a)`` to shrink ``v(B(R))`` into small discs,
    which fails when that cap contains ∞.
    """
    while True:
        v = random_su2(rng)
        if frame_image_radius(v, radius) <= max_image_radius:
            return v


def properness_experiment(h: DiscretizedSphereMap, cfg: PropernessExperimentConfig) -> ExperimentReport:
    """Energy of ``h ∘ g_n`` on ``B(R)`` for ``g_n = u D(a_n) v``, fitted against ``a_n``."""
    delta2 = energy(h)
    if delta2 <= 1e-6:
        raise ConstantMap("properness experiment needs a non-constant map")
    ball = Region.ball(cfg.x0, cfg.rho)
    disc_energy = energy(h, ball)
    z, w = h.grid.homogeneous()
    dens = energy_density(h)[ball.mask(z, w)]
    gamma = float(dens.min()) if dens.size else 0.0
    n2 = max(1, math.ceil(delta2 / disc_energy)) if disc_energy > 0 else 0
    threshold = delta2 / n2 if n2 else math.inf
    disc = Region.disc(cfg.radius)

    energies, areas = [], []
    for a in cfg.a_sequence:
        g = cfg.u @ MobiusTransform.diag(a) @ cfg.v
        energies.append(energy(reparametrize(h, g), disc))
        areas.append(area_image_disc(g, cfg.radius))

    k = cfg.fit_from - 1
    la = np.log(np.asarray(cfg.a_sequence[k:]))
    le = np.log(np.maximum(np.asarray(energies[k:]), 1e-300))
    slope, intercept = np.polyfit(la, le, 1)

    monotone_from = len(energies)
    while monotone_from > 1 and energies[monotone_from - 2] >= energies[monotone_from - 1]:
        monotone_from -= 1
    below = [i + 1 for i, e in enumerate(energies) if e < threshold]
    below_from = None
    if below and all(e < threshold for e in energies[below[-1] - 1 :]):
        # first n from which every later E_n stays below the threshold
        below_from = next(n for n in range(1, len(energies) + 1) if all(e < threshold for e in energies[n - 1 :]))
    lo, hi = cfg.exponent_window
    ok = below_from is not None and lo <= slope <= hi
    inside = abs(cfg.x0) + cfg.rho <= cfg.radius
    return ExperimentReport(
        a_n=tuple(cfg.a_sequence),
        energies=tuple(energies),
        image_areas=tuple(areas),
        delta2=delta2,
        disc_energy=disc_energy,
        gamma=gamma,
        n2=n2,
        threshold=threshold,
        exponent=float(slope),
        constant_fit=float(math.exp(intercept)),
        monotone_from=monotone_from,
        below_from=below_from,
        frame_image_radius=frame_image_radius(cfg.v, cfg.radius),
        concentration_disc_inside=inside,
        verdict="PASS" if ok else "FAIL",
    )


# ---------------------------------------------------------------------------
# S^1-invariant maps


def rotation(angle: float) -> MobiusTransform:
    """``z -> e^{i angle} z``."""
    return MobiusTransform(np.diag([np.exp(0.5j * angle), np.exp(-0.5j * angle)]))


def standard_s1_map(profile: Callable[[np.ndarray], np.ndarray], n: int) -> DiscretizedSphereMap:
    """``profile ∘ μ`` with ``μ`` the height function."""
    return sample_map(lambda z, w: profile(height(z, w)), n)


def s1_invariance_defect(f: DiscretizedSphereMap, steps: int = 64) -> float:
    """Largest C^0 change of ``f`` under rotations about the polar axis."""
    return max(c0_distance(f, reparametrize(f, rotation(2 * math.pi * k / steps))) for k in range(steps))


# ---------------------------------------------------------------------------
# nodal maps


@dataclass(frozen=True)
class NodalMap:
    """One formula per component, matched at the double points."""

    labeled: LabeledTree
    double_points: Mapping[tuple[int, int], SpherePoint]  # (v, u) -> d_vu on component v
    components: Mapping[int, Formula]

    def value_at(self, v: int, p: SpherePoint) -> np.ndarray:
        return np.asarray(self.components[v](np.array([p.z]), np.array([p.w])), dtype=float).reshape(-1)

    def values_at_doubles(self) -> dict[tuple[int, int], np.ndarray]:
        return {(v, u): self.value_at(v, p) for (v, u), p in self.double_points.items()}

    def sample(self, n: int) -> dict[int, DiscretizedSphereMap]:
        return {v: sample_map(f, n) for v, f in self.components.items()}


def build_nodal_map(
    labeled: LabeledTree, double_points: Mapping[tuple[int, int], SpherePoint], base: Formula = inclusion
) -> NodalMap:
    """Translate copies of ``base`` so neighbouring components agree at their node.

    Offsets are fixed walking outward from the least vertex; on a tree each
    edge is met once, so every gluing condition holds by construction.
    """
    t = labeled.tree
    root = t.vertices[0]
    offsets = {root: np.zeros(0)}
    comps: dict[int, Formula] = {root: base}
    stack = [root]

    def shifted(off: np.ndarray) -> Formula:
        return lambda z, w: base(z, w) + off

    while stack:
        v = stack.pop()
        for u in t.adjacency[v]:
            if u in comps:
                continue
            pv = double_points[(v, u)]
            pu = double_points[(u, v)]
            target = np.asarray(comps[v](np.array([pv.z]), np.array([pv.w])), dtype=float).reshape(-1)
            here = np.asarray(base(np.array([pu.z]), np.array([pu.w])), dtype=float).reshape(-1)
            off = target - here
            offsets[u] = off
            comps[u] = shifted(off)
            stack.append(u)
    return NodalMap(labeled, dict(double_points), comps)


def kak_frames(g: MobiusTransform) -> tuple[MobiusTransform, float, MobiusTransform]:
    dec = kak_decompose(g)
    return dec.u, dec.a, dec.v
