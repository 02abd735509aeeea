"""Command-line entry point: ``ntl <group> <action> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import VerificationSuiteConfig
from .energy import PropernessExperimentConfig, constant, inclusion, properness_experiment, sample_map
from .mobius import FiniteSubgroupSample, MobiusTransform, classify_finite_subgroup, kak_decompose, kak_residual, normalize
from .moduli import SpecialPointConfig, chart, coordinates_to_json
from .tree_aut import (
    automorphism_group,
    decompose_stabilizer,
    involution_midpoint,
    level_one_points,
    realizable_symmetry_report,
)
from .tree_core import LabeledTree, Tree, canonical_form, enumerate_trees, tips, trees_with
from .tree_morphism import TreeMorphism, has_flipped_identification
from .tree_order import order_from_labeling, total_order_from_tip_order
from .verify import CHECKS, OUT_OF_SCOPE, SCHEMA_VERSION, CheckResult

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 on its own; keep that, but quietly
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix_json(g: MobiusTransform) -> list[list[list[float]]]:
    return [[_complex_pair(x) for x in row] for row in g.matrix]


def _emit(args: argparse.Namespace, payload: dict, rows: list[Sequence] | None = None, header: Sequence[str] = ()) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    if args.format == "csv":
        if rows is None:
            raise UsageError("this command has no CSV form")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_trees_enumerate(args: argparse.Namespace) -> int:
    ts = trees_with(args.n) if args.n is not None else enumerate_trees(args.max_vertices)
    _emit(
        args,
        {"lemma": "tree-enumeration", "count": len(ts), "trees": [{**t.to_json(), "canonical": canonical_form(t)} for t in ts]},
        rows=[(len(t.vertices), canonical_form(t), json.dumps(t.to_json()["edges"])) for t in ts],
        header=("vertices", "canonical", "edges"),
    )
    return EXIT_OK


def cmd_morphism_check(args: argparse.Namespace) -> int:
    m = TreeMorphism.from_json(_load_json(args.file))
    flipped, witness = has_flipped_identification(m)
    _emit(
        args,
        {
            "lemma": "morphism-iff-no-flipped-identification",
            "premorphism": m.is_premorphism,
            "morphism": m.is_morphism,
            "flipped_witness": list(witness) if flipped else None,
        },
    )
    return EXIT_OK


def cmd_order_compute(args: argparse.Namespace) -> int:
    data = _load_json(args.file)
    if "labels" in data:
        lo = order_from_labeling(LabeledTree.from_json(data))
        out = lo.to_json()
    else:
        t = Tree.from_json(data)
        order = total_order_from_tip_order(t, data.get("ordered_tips") or tips(t))
        out = order.to_json()
    _emit(args, {"lemma": "total-order-from-tips", **out})
    return EXIT_OK


def cmd_aut_analyze(args: argparse.Namespace) -> int:
    t = Tree.from_json(_load_json(args.file))
    group = automorphism_group(t)
    pts, witness = level_one_points(t)
    mid = involution_midpoint(t)
    _emit(
        args,
        {
            "lemma": "stabilizer-order-and-single-fixed-vertex",
            "order": group.order,
            "generators": [{str(k): v for k, v in sorted(g.items())} for g in group.generators()],
            "involution_midpoint": list(mid) if mid else None,
            "level_one_points": pts,
            "level_one_witness": witness,
            "stabilizer_structure": {str(v): decompose_stabilizer(t, v).to_json() for v in t.vertices},
            "realizable_report": {str(v): realizable_symmetry_report(t, v) for v in t.vertices},
        },
    )
    return EXIT_OK


def _parse_matrix(text: str) -> MobiusTransform:
    try:
        vals = [complex(x.strip().replace(" ", "")) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad matrix entry: {exc}") from exc
    if len(vals) != 4:
        raise UsageError("--matrix needs four comma-separated entries a,b,c,d")
    return normalize(np.array(vals).reshape(2, 2))


def cmd_mobius_decompose(args: argparse.Namespace) -> int:
    g = _parse_matrix(args.matrix)
    dec = kak_decompose(g)
    _emit(
        args,
        {
            "lemma": "kak-decomposition",
            "u": _matrix_json(dec.u),
            "a": dec.a,
            "v": _matrix_json(dec.v),
            "residual": kak_residual(g, dec),
        },
    )
    return EXIT_OK


def cmd_mobius_classify(args: argparse.Namespace) -> int:
    sample = FiniteSubgroupSample.from_json(_load_json(args.group))
    c = classify_finite_subgroup(sample)
    _emit(args, {"lemma": "finite-subgroup-classification", **c.to_json()})
    return EXIT_OK


def cmd_moduli_chart(args: argparse.Namespace) -> int:
    conf = SpecialPointConfig.from_json(_load_json(args.file))
    coords = chart(conf)
    rows = []
    for v, row in sorted(coords.items()):
        for i, p in sorted(row.items()):
            z = p.to_complex()
            rows.append((v, i, "inf" if z == math.inf else z.real, "" if z == math.inf else z.imag))
    _emit(args, {"lemma": "cross-ratio-chart-invariance", "w": coordinates_to_json(coords)}, rows, ("vertex", "index", "re", "im"))
    return EXIT_OK


MAPS = {"inclusion": inclusion, "constant": constant([0.0, 0.0, 1.0])}


def cmd_energy_experiment(args: argparse.Namespace) -> int:
    h = sample_map(MAPS[args.map], args.N)
    cfg = PropernessExperimentConfig(
        radius=args.R, a_sequence=tuple(2.0**-n for n in range(1, args.steps + 1)), resolution=args.N
    )
    rep = properness_experiment(h, cfg)
    _emit(
        args,
        {"lemma": "properness-energy-decay", "config": cfg.to_json(), "report": rep.to_json()},
        rows=rep.csv_rows(),
        header=("a_n", "E_n"),
    )
    if args.out and args.format == "json":
        # the (a_n, E_n) table always travels with the report
        with open(Path(args.out).with_suffix(".csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("a_n", "E_n"))
            w.writerows(rep.csv_rows())
    return EXIT_OK if rep.verdict == "PASS" else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = VerificationSuiteConfig(max_vertices=args.max_vertices, seed=args.seed, resolution=args.N, out=args.out)
    results = []
    for idx, fn in CHECKS:
        r = fn(cfg)
        results.append({"criterion": idx, **r.to_json()})
        print(f"[{r.status.upper():4}] {idx:2d} {r.lemma}  cases={r.cases} failures={r.failures}", file=sys.stderr)
    for name in OUT_OF_SCOPE:
        results.append(CheckResult(name, "skipped-out-of-scope").to_json())
        print(f"[SKIP]    {name}", file=sys.stderr)
    ok = all(r["status"] != "fail" for r in results)
    _emit(
        args,
        {"config": cfg.to_json(), "results": results, "ok": ok},
        rows=[(r.get("criterion", ""), r["lemma"], r["status"], r["cases"], r["failures"]) for r in results],
        header=("criterion", "lemma", "status", "cases", "failures"),
    )
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--max-vertices", type=int, default=8)
    common.add_argument("--seed", type=int, default=20240601)
    common.add_argument("--N", type=int, default=256)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="ntl", description=__doc__)
    p.add_argument("--version", action="version", version=f"ntl {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def action(group: str, name: str, fn, help_: str) -> argparse.ArgumentParser:
        if group not in subs:
            g = groups.add_parser(group)
            subs[group] = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
        sp = subs[group].add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    subs: dict[str, argparse._SubParsersAction] = {}
    sp = action("trees", "enumerate", cmd_trees_enumerate, "list trees up to isomorphism")
    sp.add_argument("--n", type=int, help="exact vertex count (default: all up to --max-vertices)")
    action("morphism", "check", cmd_morphism_check, "classify a vertex map").add_argument("file")
    action("order", "compute", cmd_order_compute, "total order from tips or labels").add_argument("file")
    action("aut", "analyze", cmd_aut_analyze, "automorphism group report").add_argument("file")
    action("mobius", "decompose", cmd_mobius_decompose, "KAK decomposition").add_argument("--matrix", required=True)
    action("mobius", "classify", cmd_mobius_classify, "classify a finite subgroup").add_argument("--group", required=True)
    action("moduli", "chart", cmd_moduli_chart, "cross-ratio coordinates").add_argument("file")
    sp = action("energy", "experiment", cmd_energy_experiment, "energy decay under D(a_n)")
    sp.add_argument("--map", choices=sorted(MAPS), default="inclusion")
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=8)
    verify = groups.add_parser("verify", parents=[common], help="run the full check matrix")
    verify.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.N < 16 or args.N % 2:
            raise UsageError("--N must be an even integer >= 16")
        if not 1 <= args.max_vertices <= 10:
            raise UsageError("--max-vertices must lie in 1..10")
        return args.func(args)
    except UsageError as exc:
        print(f"ntl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"ntl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
