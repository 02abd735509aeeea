"""Centralized numerical tolerances and run settings."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Tolerances:
    singular: float = 1e-14  # |det| below this is singular
    det: float = 1e-12  # |det - 1| after normalization
    psl_group: float = 1e-9  # element equality inside finite groups
    reconstruction: float = 1e-12  # KAK reconstruction
    su2: float = 1e-9  # g g* = 1 test
    degenerate: float = 1e-12  # cross-ratio triple distinctness
    distinct: float = 1e-10  # special points on a component
    chart_invariance: float = 1e-9
    slice_rigidity: float = 1e-10
    gluing: float = 1e-9
    constant: float = 1e-9  # sup deviation for a "constant" sampled map
    energy_rel: float = 0.01  # quadrature bound used for energy separation
    energy_abs: float = 1e-8


TOL = Tolerances()


@dataclass(frozen=True)
class VerificationSuiteConfig:
    max_vertices: int = 8
    premorphism_vertices: int = 5
    seed: int = 20240601
    resolution: int = 256
    random_trials: int = 1000
    kak_trials: int = 10_000
    out: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self) -> None:
        if not 1 <= self.max_vertices <= 10:
            raise ValueError("max_vertices must lie in 1..10")

    def to_json(self) -> dict:
        data = asdict(self)
        data.pop("out")
        return data


def worker_count() -> int:
    """Process count for exhaustive scans, capped by ``NTL_THREADS``."""
    n = os.cpu_count() or 1
    cap = os.environ.get("NTL_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n
