"""One test per acceptance criterion, each printing a single PASS/FAIL line.

The lines are collected and repeated in the terminal summary, so
``pytest -v`` shows all fourteen verdicts together at the end.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ntl.config import VerificationSuiteConfig
from ntl.energy import PropernessExperimentConfig, frame_image_radius, inclusion, properness_experiment, sample_map
from ntl.mobius import random_su2
from ntl.tree_core import tips, trees_with
from ntl.verify import (
    check_chart_invariance,
    check_energy_quadrature,
    check_finite_subgroups,
    check_flip_criterion,
    check_involution_midpoint,
    check_kak,
    check_order_contraction,
    check_properness,
    check_s1_invariance,
    check_separation,
    check_stabilization_formula,
    check_stable_labeled_groups,
    check_stabilizer_structure,
    check_tip_determination,
)

from .conftest import ACCEPTANCE_LINES
from .oracles import brute_automorphisms

CFG = VerificationSuiteConfig()


def report(idx: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {idx:2d} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_c01_morphism_iff_no_flip():
    res, dt = timed(check_flip_criterion, CFG)
    ok = res.failures == 0 and dt <= 60
    report(1, "morphism iff no flipped identification", ok, f"{res.cases} pre-morphisms, {res.failures} counterexamples, {dt:.1f}s")
    assert ok, res.examples


def test_c02_tip_determination():
    res = check_tip_determination(CFG)
    # second opinion from the n! automorphism scan
    oracle_bad = 0
    for n in range(1, 8):
        for t in trees_with(n):
            ts = tips(t)
            idx = {v: i for i, v in enumerate(t.vertices)}
            keys = [tuple(p[idx[v]] for v in ts) for p in brute_automorphisms(t)]
            oracle_bad += len(keys) - len(set(keys))
    ok = res.failures == 0 and oracle_bad == 0
    report(2, "isomorphisms determined by tips", ok, f"{res.cases} automorphisms, {res.failures + oracle_bad} counterexamples")
    assert ok, res.examples


def test_c03_stable_labeled_groups():
    res = check_stable_labeled_groups(CFG)
    ok = res.failures == 0
    report(3, "stable labeled trees: trivial ordered group, unordered = Aut(T)", ok, f"{res.cases} labelings, {res.failures} failures")
    assert ok, res.examples


def test_c04_stabilization_formula():
    res = check_stabilization_formula(CFG)
    ok = res.failures == 0
    report(4, "minimal stabilization count formula", ok, f"{res.cases} labeled trees, {res.failures} failures")
    assert ok, res.examples


def test_c05_order_contraction():
    res = check_order_contraction(CFG)
    ok = res.failures == 0
    report(5, "total order compatible with contractions", ok, f"{res.cases} (tree, tip order, contraction) cases, {res.failures} counterexamples")
    assert ok, res.examples


def test_c06_involution_midpoint():
    res = check_involution_midpoint(CFG)
    ok = res.failures == 0
    report(6, "at most one involution midpoint", ok, f"{res.cases} trees, {res.failures} failures")
    assert ok, res.examples


def test_c07_stabilizer_structure():
    res, dt = timed(check_stabilizer_structure, CFG)
    ok = res.failures == 0 and dt <= 300
    report(7, "stabilizer order formula and single fixed vertex", ok, f"{res.cases} (tree, vertex) cases, {res.failures} failures, {dt:.1f}s")
    assert ok, res.examples


def test_c08_chart_invariance():
    res = check_chart_invariance(CFG)
    ok = res.failures == 0 and res.detail["max_deviation"] <= 1e-9
    report(8, "cross-ratio chart invariance and round trip", ok, f"max deviation {res.detail['max_deviation']:.2e}, {res.failures} failures")
    assert ok, res.examples


def test_c09_kak():
    res = check_kak(CFG)
    ok = res.failures == 0
    report(9, "KAK decomposition", ok, f"max residual {res.detail['max_residual']:.2e} over {CFG.kak_trials} matrices")
    assert ok, res.examples


def test_c10_finite_subgroups():
    res = check_finite_subgroups(CFG)
    ok = res.failures == 0 and res.cases == 18
    report(10, "finite subgroup classification", ok, f"{res.cases} groups, {res.failures} misclassified")
    assert ok, res.examples


def test_c11_energy_quadrature():
    res = check_energy_quadrature(CFG)
    ok = res.failures == 0
    d = res.detail
    report(
        11,
        "energy quadrature",
        ok,
        f"identity rel error {d['identity_energy_rel_error']:.2e}, reparametrization change {d['reparametrization_max_rel_change']:.2e}",
    )
    assert ok


def _unrestricted_frames(h, count: int = 10) -> list[tuple[float, float, str]]:
    rng = np.random.default_rng(CFG.seed + 99)
    rows = []
    for _ in range(count):
        u, v = random_su2(rng), random_su2(rng)
        rep = properness_experiment(h, PropernessExperimentConfig(u=u, v=v, resolution=CFG.resolution))
        rows.append((frame_image_radius(v, 1.0), rep.exponent, rep.verdict))
    return rows


def test_c12_properness_decay():
    res, dt = timed(check_properness, CFG)
    ok = res.failures == 0 and dt <= 120
    exps = res.detail["frame_exponents"]
    report(
        12,
        "properness energy decay",
        ok,
        f"exponent {res.detail['default_exponent']:.3f}, admissible frames {min(exps):.3f}..{max(exps):.3f}, {dt:.1f}s",
    )
    # diagnostic only: v drawn from the full Haar measure
    rows = _unrestricted_frames(sample_map(inclusion, CFG.resolution))
    for radius, exponent, verdict in rows:
        r = "inf" if math.isinf(radius) else f"{radius:.2f}"
        line = f"       unrestricted frame (diagnostic): max |v(B(1))| = {r}, exponent {exponent:.3f}, {verdict}"
        print(line)
        ACCEPTANCE_LINES.append(line)
    assert ok, res.examples


def test_c13_separation():
    res = check_separation(CFG)
    ok = res.failures == 0 and res.cases == 6
    report(13, "energy and constant-image separation", ok, f"{res.cases} examples, {res.failures} failures")
    assert ok


def test_c14_s1_invariance():
    res = check_s1_invariance(CFG)
    ok = res.failures == 0
    d = res.detail
    report(14, "S1-invariant components", ok, f"standard defect {d['standard_defect']:.1e}, perturbed defect {d['perturbed_defect']:.3f}")
    assert ok

