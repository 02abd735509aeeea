from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from ntl.energy import (
    ConstantMap,
    NonFiniteValue,
    NotConstant,
    PropernessExperimentConfig,
    Region,
    SphereGrid,
    area_image_disc,
    c0_distance,
    constant,
    constant_image_separation,
    disc_area_closed_form,
    energy,
    energy_density,
    energy_separation,
    frame_image_radius,
    height,
    inclusion,
    properness_experiment,
    random_admissible_frame,
    reparametrize,
    rotation,
    s1_invariance_defect,
    sample_map,
    standard_s1_map,
)
from ntl.mobius import MobiusTransform, kak_decompose, random_sl2, random_su2

DATA = Path(__file__).parent / "data"
FOUR_PI = 4 * math.pi


@pytest.fixture(scope="module")
def sphere64():
    return sample_map(inclusion, 64)


@pytest.fixture(scope="module")
def sphere128():
    return sample_map(inclusion, 128)


def test_grid_validation():
    for bad in (8, 63):
        with pytest.raises(ValueError):
            SphereGrid(bad)


def test_constant_sampling():
    f = sample_map(constant([1.0, -2.0]), 32)
    assert np.all(f.values == [1.0, -2.0])
    assert energy(f) < 1e-10


def test_non_finite_values_rejected():
    with pytest.raises(NonFiniteValue), np.errstate(divide="ignore", invalid="ignore"):
        sample_map(lambda z, w: (z / w).real[..., None], 32)  # blows up at the north pole


def test_inclusion_golden(sphere64):
    golden = json.loads((DATA / "inclusion_n64.json").read_text())
    v = np.round(sphere64.values, 12) + 0.0
    assert list(v.shape) == golden["shape"]
    assert hashlib.sha256(np.ascontiguousarray(v).tobytes()).hexdigest() == golden["sha256"]
    assert sphere64.north.tolist() == golden["north"] and sphere64.south.tolist() == golden["south"]


def test_inclusion_matches_spherical_coordinates(sphere64):
    g = sphere64.grid
    th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
    expected = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    assert np.max(np.abs(sphere64.values - expected)) < 1e-14


def test_weights_total(sphere128):
    assert sphere128.weights.sum() == pytest.approx(FOUR_PI, rel=1e-3)


def test_inclusion_energy_density(sphere128):
    # |df|^2 = 2 for the identity of the round sphere
    e = energy_density(sphere128)
    assert np.max(np.abs(e - 1.0)) < 0.01


def test_inclusion_energy_at_256():
    assert energy(sample_map(inclusion, 256)) == pytest.approx(FOUR_PI, rel=0.005)


def test_region_additivity(sphere128):
    z, w = sphere128.grid.homogeneous()
    for region in (Region.disc(1.0), Region.disc(0.3), Region.ball(1, 0.3)):
        inside = energy(sphere128, region)
        outside = float(np.sum(energy_density(sphere128) * sphere128.weights * region.complement_mask(z, w)))
        assert inside + outside == pytest.approx(energy(sphere128), rel=0.005)


def test_disc_area_on_grid(sphere128):
    area = float(np.sum(sphere128.weights * Region.disc(1.0).mask(*sphere128.grid.homogeneous())))
    assert area == pytest.approx(disc_area_closed_form(1.0, 1.0), rel=0.01)


def test_reparametrize_identity(sphere64):
    same = reparametrize(sphere64, MobiusTransform.identity())
    assert c0_distance(same, sphere64) < 1e-12


def test_rotation_keeps_energy(sphere128):
    rng = np.random.default_rng(0)
    base = energy(sphere128)
    for _ in range(5):
        assert energy(reparametrize(sphere128, random_su2(rng))) == pytest.approx(base, rel=0.01)


def test_conformal_invariance_of_whole_energy():
    f = sample_map(inclusion, 256)
    base = energy(f)
    rng = np.random.default_rng(1)
    tried = 0
    while tried < 4:
        g = random_sl2(rng)
        if kak_decompose(g).a < 0.1:
            continue
        tried += 1
        assert energy(reparametrize(f, g)) == pytest.approx(base, rel=0.01)


def test_area_examples():
    d = MobiusTransform.diag
    assert area_image_disc(d(1.0), 1e6) == pytest.approx(FOUR_PI, rel=1e-3)
    assert area_image_disc(d(0.5), 1.0) == pytest.approx(0.8 * math.pi, rel=1e-9)
    assert disc_area_closed_form(0.5, 1.0) == pytest.approx(0.8 * math.pi)


def test_area_matches_closed_form_on_a_grid():
    for a in np.geomspace(1e-3, 1, 13):
        for r in np.geomspace(0.1, 10, 9):
            got = area_image_disc(MobiusTransform.diag(a), r)
            assert got == pytest.approx(disc_area_closed_form(a, r), rel=0.005)


def test_area_scaling_slope():
    a = np.geomspace(1e-4, 1e-2, 10)
    areas = [area_image_disc(MobiusTransform.diag(x), 1.0) for x in a]
    slope = np.polyfit(np.log(a), np.log(areas), 1)[0]
    assert abs(slope - 2) < 0.05
    assert areas[0] / a[0] ** 2 == pytest.approx(FOUR_PI, rel=1e-3)


def test_area_with_pole_inside():
    # z -> 1/z sends the unit disc to its complement, which has the same area
    inv = MobiusTransform(np.array([[0, 1j], [1j, 0]]))
    assert area_image_disc(inv, 0.5) == pytest.approx(FOUR_PI - disc_area_closed_form(1, 2.0), rel=1e-9)
    # an SU(2) element preserves area
    g = random_su2(np.random.default_rng(3))
    assert area_image_disc(g, 1.3) == pytest.approx(disc_area_closed_form(1, 1.3), rel=1e-9)


def test_properness_default():
    rep = properness_experiment(sample_map(inclusion, 256), PropernessExperimentConfig())
    assert rep.verdict == "PASS"
    assert 1.8 <= rep.exponent <= 2.2
    assert rep.below_from is not None and rep.monotone_from <= 4
    assert rep.energies[-1] < rep.threshold


def test_properness_constant_map():
    with pytest.raises(ConstantMap):
        properness_experiment(sample_map(constant([0, 0, 1]), 64), PropernessExperimentConfig(resolution=64))


def test_properness_admissible_frames():
    rng = np.random.default_rng(20240601)
    h = sample_map(inclusion, 128)
    for _ in range(3):
        u = random_su2(rng)
        v = random_admissible_frame(rng, 1.0, 4.0)
        assert frame_image_radius(v, 1.0) <= 4.0
        rep = properness_experiment(h, PropernessExperimentConfig(u=u, v=v, resolution=128))
        assert rep.verdict == "PASS", rep.exponent


def test_no_decay_when_the_frame_cap_holds_infinity():
    # v = z -> -1/z puts ∞ inside v(B(1)); D(a) then spreads the cap over the sphere
    v = MobiusTransform(np.array([[0, -1], [1, 0]], dtype=complex))
    assert frame_image_radius(v, 1.0) == math.inf
    rep = properness_experiment(sample_map(inclusion, 128), PropernessExperimentConfig(v=v, resolution=128))
    assert rep.verdict == "FAIL"
    # the true energies climb towards 4π; the grid only loses some of it late on
    assert min(rep.energies) > rep.threshold
    assert max(rep.energies) == pytest.approx(FOUR_PI, rel=0.03)


def test_config_validation():
    with pytest.raises(ValueError):
        PropernessExperimentConfig(a_sequence=(0.5, 0.5))
    with pytest.raises(ValueError):
        PropernessExperimentConfig(radius=0)


def test_energy_separation_examples(sphere128):
    const = sample_map(constant([0, 0, 1]), 128)
    c = energy_separation(const, sphere128)
    assert c == pytest.approx(2 * math.pi, rel=0.01)
    moved = reparametrize(sample_map(inclusion, 256), MobiusTransform.diag(0.7) @ random_su2(np.random.default_rng(6)))
    assert energy_separation(sample_map(inclusion, 256), moved) is None
    assert energy_separation(const, sample_map(constant([5, 0, 0]), 128)) is None


def test_constant_image_separation():
    a = sample_map(constant([0, 0, 0]), 32)
    b = sample_map(constant([1, 0, 0]), 32)
    assert c0_distance(a, a) == 0 and not constant_image_separation(a, a, 0.1, 0.1)
    assert constant_image_separation(a, b, 0.1, 0.1)
    moved = reparametrize(a, random_sl2(np.random.default_rng(2)))
    assert c0_distance(a, moved) == 0
    with pytest.raises(NotConstant):
        constant_image_separation(a, sample_map(inclusion, 32), 0.1, 0.1)


def test_s1_invariant_maps():
    f = standard_s1_map(lambda t: np.stack([t, 0 * t, 0 * t], axis=-1), 64)
    assert s1_invariance_defect(f) <= 1e-12
    g = reparametrize(f, rotation(0.37))
    assert c0_distance(f, g) <= 1e-12


def test_s1_perturbation_detected():
    def perturbed(z, w):
        t = height(z, w)
        return np.stack([t + 0.1 * np.cos(np.angle(z * np.conj(w))), 0 * t, 0 * t], axis=-1)

    assert s1_invariance_defect(sample_map(perturbed, 64)) >= 0.05
