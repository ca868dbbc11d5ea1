"""Command-line pipelines over the library.

Each subcommand reads schema-validated JSON, runs one pipeline stage,
and writes its outputs plus a run manifest into ``--out``.  Every output
document carries the provenance digest of the command, its configuration,
and its input files, so downstream files can be traced to the exact bytes
that produced them.

Exit codes partition by error family: 0 success, 1 schema violation,
2 topological obstruction (a certified result, reported machine-readably
on stdout), 3 numerical guard.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import io
from .classes import (
    euler_cochain,
    euler_number,
    fundamental_class_twisted,
    sw_class,
)
from .cochains import Cochain, cocycle_defect
from .doublecover import connectivity_cocycle, unwrap_double_cover, carry_charts
from .errors import (
    GuardError,
    NotASurface,
    ObstructionError,
    SchemaError,
)
from .intlinalg import solve_gf2
from .nerve import build_nerve, cut_base, edge_weights, filtration_order
from .persistence import persistence_report
from .projection import (
    bundle_map,
    frame_field,
    global_trivialize,
    partition_of_unity,
    reduction_curve,
)
from .synthetic import (
    gen_disconnected_fiber,
    gen_lens_bundle,
    gen_rp2_bundle,
    gen_s1_bundle,
)
from .witness import Trivialization, assemble_witness, triv_quality

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_OBSTRUCTION = 2
EXIT_GUARD = 3

# which flags name input files, per subcommand
_INPUTS = {
    "synth": [],
    "witness": ["data", "cover", "trivs"],
    "classes": ["witness"],
    "euler": ["classes"],
    "persist": ["witness"],
    "coordinatize": ["data", "cover", "trivs"],
    "trivialize": ["data", "cover", "trivs"],
    "unwrap": ["data", "cover", "trivs", "clusters"],
    "report": ["data", "cover", "trivs"],
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved here for
    # obstructions; bad usage is a schema violation
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_SCHEMA)


class _Run:
    """Provenance and output bookkeeping for one subcommand invocation."""

    def __init__(self, command: str, config: dict, input_paths: list[str], seed):
        self.command = command
        self.config = config
        self.inputs = io.input_rows(input_paths)
        self.seed = seed
        self.digest = io.provenance_digest(command, config, self.inputs, seed)
        self.timings: list[tuple[str, float]] = []
        self.outputs: list[dict] = []
        self.out_dir: str | None = None

    def open(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name: str, doc: dict):
        doc = dict(doc)
        doc["provenance"] = self.digest
        digest = io.dump_json(doc, os.path.join(self.out_dir, name))
        self.outputs.append({"path": name, "sha256": digest})

    def timed(self, name: str):
        return _Timer(self, name)

    def finish(self, status: int):
        if self.out_dir is None:
            return
        doc = io.manifest_doc(
            self.command,
            self.config,
            self.inputs,
            self.seed,
            self.timings,
            outputs=self.outputs,
        )
        doc["status"] = status
        io.dump_json(doc, os.path.join(self.out_dir, "manifest.json"))


class _Timer:
    def __init__(self, run: _Run, name: str):
        self.run = run
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.run.timings.append((self.name, time.perf_counter() - self.t0))
        return False


# ---------------------------------------------------------------------------
# shared pipeline pieces


def _load_bundle(args):
    ds = io.parse_dataset(io.load_json(args.data))
    cover = io.parse_cover(io.load_json(args.cover))
    trivs = io.parse_trivs(io.load_json(args.trivs))
    ids = set(ds.ids)
    for c in cover:
        if not c.members <= ids:
            raise SchemaError(
                f"cover set {c.id} references samples outside the dataset"
            )
        chart = trivs.charts.get(c.id)
        if chart is None:
            raise SchemaError(f"no chart for cover set {c.id}")
        if set(chart) != set(c.members):
            raise SchemaError(
                f"chart {c.id} domain does not match the cover set members"
            )
    extra = set(trivs.charts) - {c.id for c in cover}
    if extra:
        raise SchemaError(f"charts {sorted(extra)} have no cover set")
    return ds, cover, trivs


def _sign_is_coboundary(sw: Cochain) -> bool:
    nerve = sw.nerve
    verts = [v[0] for v in nerve.vertices]
    vpos = {j: i for i, j in enumerate(verts)}
    edges = list(nerve.edges)
    a = np.zeros((len(edges), len(verts)), dtype=np.uint8)
    b = np.zeros(len(edges), dtype=np.uint8)
    for row, (j, k) in enumerate(edges):
        a[row, vpos[j]] = 1
        a[row, vpos[k]] = 1
        b[row] = 1 if sw.values[(j, k)] < 0 else 0
    return solve_gf2(a, b) is not None


def _quality_dict(q) -> dict:
    # alpha is infinite when coverage is too sparse; null in transit
    return {
        "epsilon": float(q.epsilon),
        "delta": float(q.delta),
        "delta_pairwise": float(q.delta_pairwise),
        "delta_triple": float(q.delta_triple),
        "alpha": None if not np.isfinite(q.alpha) else float(q.alpha),
        "cocycle_epsilon": float(q.cocycle_epsilon),
    }


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_synth(args, run: _Run):
    name, _, arg = args.model.partition(":")
    power = None
    if arg:
        try:
            power = int(arg)
        except ValueError:
            raise SchemaError(f"model parameter must be an integer, got {arg!r}")
        if power <= 0:
            raise SchemaError("model parameter must be positive")

    kwargs: dict = {"seed": args.seed, "noise": args.noise}
    if args.samples is not None:
        kwargs["n_samples"] = args.samples
    circle = name in ("torus", "klein")
    if args.sets is not None:
        kwargs["n_arcs" if circle else "n_sets"] = args.sets
    if args.radius is not None:
        if circle:
            raise SchemaError("circle covers fix their radius from the arc count")
        kwargs["radius"] = args.radius

    with run.timed("generate"):
        if circle:
            if power is not None:
                raise SchemaError(f"model {name!r} takes no parameter")
            bundle = gen_s1_bundle(orientable=(name == "torus"), **kwargs)
        elif name == "lens":
            bundle = gen_lens_bundle(1 if power is None else power, **kwargs)
        elif name == "rp2":
            bundle = gen_rp2_bundle(1 if power is None else power, **kwargs)
        elif name in ("disconnected", "split"):
            bundle = gen_disconnected_fiber(
                5 if power is None else power, split=(name == "split"), **kwargs
            )
        else:
            raise SchemaError(f"unknown model {args.model!r}")

    with run.timed("write"):
        run.write("dataset.json", io.dataset_doc(bundle.dataset))
        run.write("cover.json", io.cover_doc(bundle.cover))
        run.write("trivs.json", io.trivs_doc(bundle.trivs))
        run.write("scenario.json", io.scenario_doc(bundle.scenario))
        if bundle.clusters is not None:
            run.write("clusters.json", io.clusters_doc(bundle.clusters))

    sc = bundle.scenario
    return {
        "command": "synth",
        "model": sc.model,
        "samples": sc.n_samples,
        "cover_sets": sc.cover_sets,
        "sw_trivial": sc.sw_trivial,
        "euler_number": sc.euler_number,
    }


def _cmd_witness(args, run: _Run):
    with run.timed("load"):
        ds, cover, trivs = _load_bundle(args)
    with run.timed("nerve"):
        nerve = build_nerve(cover)
    with run.timed("witness"):
        wit = assemble_witness(trivs, nerve)
        q = triv_quality(trivs, wit, nerve)
    with run.timed("filtration"):
        nerve = filtration_order(edge_weights(nerve, trivs, wit))
        wit = Cochain(nerve, 1, "O2", wit.values)
    with run.timed("write"):
        run.write("witness.json", io.witness_doc(wit, quality=_quality_dict(q)))
    return {
        "command": "witness",
        "edges": len(nerve.edges),
        "triangles": len(nerve.triangles),
        "epsilon": q.epsilon,
        "delta": q.delta,
        "cocycle_epsilon": q.cocycle_epsilon,
    }


def _cmd_classes(args, run: _Run):
    with run.timed("load"):
        wit, _ = io.parse_witness(io.load_json(args.witness))
    with run.timed("classes"):
        result = euler_cochain(wit)
        swb = _sign_is_coboundary(result.sw)
        defect = cocycle_defect(wit)
    with run.timed("write"):
        run.write(
            "classes.json",
            io.classes_doc(
                wit.nerve,
                result.sw,
                result.euler,
                result.lift,
                result.bracket_margin,
                swb,
                defect,
            ),
        )
    return {
        "command": "classes",
        "sw_coboundary": swb,
        "euler_support": sum(1 for v in result.euler.values.values() if v != 0),
        "bracket_margin": None
        if result.bracket_margin == float("inf")
        else result.bracket_margin,
    }


def _cmd_euler(args, run: _Run):
    with run.timed("load"):
        parsed = io.parse_classes(io.load_json(args.classes))
    with run.timed("pairing"):
        mu = fundamental_class_twisted(parsed["nerve"], parsed["sw"])
        number = euler_number(parsed["euler"], mu)
    with run.timed("write"):
        run.write(
            "euler.json",
            {
                "schema": "circlet/euler",
                "euler_number": number,
                "magnitude": abs(number),
                "sw_coboundary": parsed["sw_coboundary"],
                "fundamental_support": sum(1 for v in mu.values() if v != 0),
            },
        )
    return {
        "command": "euler",
        "euler_number": number,
        "magnitude": abs(number),
        "sw_coboundary": parsed["sw_coboundary"],
    }


def _cmd_persist(args, run: _Run):
    with run.timed("load"):
        wit, _ = io.parse_witness(io.load_json(args.witness))
    if wit.nerve.order is None:
        raise SchemaError(
            "witness file has no filtration order; run the witness step first"
        )
    with run.timed("persistence"):
        report = persistence_report(wit, wit.nerve)
    with run.timed("write"):
        run.write("persistence.json", io.persistence_doc(report))
    return {
        "command": "persist",
        "sw_cobirth": report.sw.cobirth_weight,
        "sw_codeath": report.sw.codeath_weight,
        "euler_cobirth": report.euler.cobirth_weight,
        "euler_codeath": report.euler.codeath_weight,
        "w_max": report.w_max,
    }


def _cmd_coordinatize(args, run: _Run):
    with run.timed("load"):
        ds, cover, trivs = _load_bundle(args)
    with run.timed("nerve"):
        nerve = build_nerve(cover)
        wit = assemble_witness(trivs, nerve)
    if args.stage is not None:
        with run.timed("stage-cut"):
            nerve = filtration_order(edge_weights(nerve, trivs, wit))
            cover, _ = cut_base(ds, cover, nerve, args.stage)
            trivs = Trivialization(
                charts={
                    c.id: {s: trivs.charts[c.id][s] for s in c.members}
                    for c in cover
                }
            )
            nerve = build_nerve(cover)
            wit = assemble_witness(trivs, nerve)
    with run.timed("coordinates"):
        rho = partition_of_unity(cover, ds)
        bm = bundle_map(trivs, wit, rho, d=args.dim, stage=args.stage)
    with run.timed("write"):
        run.write("coords.json", io.frame_coords_doc(bm))
    return {
        "command": "coordinatize",
        "dim": bm.dim,
        "stage": bm.stage,
        "overlap_residual": bm.overlap_residual,
        "plane_residual": bm.plane_residual,
    }


def _cmd_trivialize(args, run: _Run):
    with run.timed("load"):
        ds, cover, trivs = _load_bundle(args)
    with run.timed("pipeline"):
        nerve = build_nerve(cover)
        wit = assemble_witness(trivs, nerve)
        rho = partition_of_unity(cover, ds)
        g = global_trivialize(ds, trivs, wit, rho)
    with run.timed("write"):
        run.write("coords.json", io.global_coords_doc(g))
    return {
        "command": "trivialize",
        "samples": len(g.angle),
        "residual": g.residual,
    }


def _cmd_unwrap(args, run: _Run):
    with run.timed("load"):
        ds, cover, trivs = _load_bundle(args)
        clusters = io.parse_clusters(io.load_json(args.clusters))
    with run.timed("unwrap"):
        nerve = build_nerve(cover)
        nu = connectivity_cocycle(clusters, nerve)
        result = unwrap_double_cover(ds, cover, clusters, nu=nu)
        lifted = carry_charts(trivs, result)
    with run.timed("write"):
        run.write("dataset.json", io.dataset_doc(result.dataset))
        run.write("cover.json", io.cover_doc(result.cover))
        run.write("trivs.json", io.trivs_doc(lifted))
        run.write(
            "unwrap.json",
            {
                "schema": "circlet/unwrap",
                "components": result.components,
                "set_map": [
                    {"set": int(new), "parent": int(j), "cluster": int(c)}
                    for new, (j, c) in sorted(result.set_map.items())
                ],
                "orientations": [
                    {"set": int(j), "sign": int(v)}
                    for j, v in sorted(result.orientations.items())
                ],
                "nu": [
                    {"simplex": list(e), "sign": int(v)}
                    for e, v in sorted(nu.values.items())
                ],
            },
        )
    return {
        "command": "unwrap",
        "components": result.components,
        "sets": len(result.cover),
        "nu_nontrivial": any(v < 0 for v in nu.values.values()),
    }


def _default_dims(ambient: int) -> list[int]:
    dims = []
    d = 2
    while d < ambient:
        dims.append(d)
        d *= 2
    dims.append(ambient)
    return dims


def _cmd_report(args, run: _Run):
    with run.timed("load"):
        ds, cover, trivs = _load_bundle(args)
    with run.timed("witness"):
        nerve = build_nerve(cover)
        wit = assemble_witness(trivs, nerve)
        q = triv_quality(trivs, wit, nerve)
    with run.timed("persistence"):
        nerve = filtration_order(edge_weights(nerve, trivs, wit))
        report = persistence_report(wit, nerve)
    with run.timed("classes"):
        classes_block: dict = {"sw_coboundary": None, "euler_number": None}
        try:
            result = euler_cochain(wit)
            classes_block["sw_coboundary"] = _sign_is_coboundary(result.sw)
            mu = fundamental_class_twisted(nerve, result.sw)
            classes_block["euler_number"] = euler_number(result.euler, mu)
        except (GuardError, NotASurface):
            pass
    with run.timed("reduction"):
        rho = partition_of_unity(cover, ds)
        ff = frame_field(wit, rho)
        if args.dims:
            try:
                dims = sorted({int(x) for x in args.dims.split(",")})
            except ValueError:
                raise SchemaError(f"bad --dims list {args.dims!r}")
        else:
            dims = _default_dims(rho.ambient)
        bad = [d for d in dims if not 2 <= d <= rho.ambient]
        if bad:
            raise SchemaError(
                f"dims {bad} outside 2..{rho.ambient} for this cover"
            )
        curve = reduction_curve(ff, dims=dims)
    with run.timed("write"):
        run.write(
            "report.json",
            {
                "schema": "circlet/report",
                "quality": _quality_dict(q),
                "persistence": {
                    k: v
                    for k, v in io.persistence_doc(report).items()
                    if k != "schema"
                },
                "classes": classes_block,
                "reduction_curve": [
                    {
                        "dim": int(d),
                        "mean_error": float(mean),
                        "max_error": float(worst),
                    }
                    for d, mean, worst in curve
                ],
            },
        )
    return {
        "command": "report",
        "epsilon": q.epsilon,
        "w_max": report.w_max,
        "dims": dims,
    }


_HANDLERS = {
    "synth": _cmd_synth,
    "witness": _cmd_witness,
    "classes": _cmd_classes,
    "euler": _cmd_euler,
    "persist": _cmd_persist,
    "coordinatize": _cmd_coordinatize,
    "trivialize": _cmd_trivialize,
    "unwrap": _cmd_unwrap,
    "report": _cmd_report,
}


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="circlet",
        description="Discrete approximate circle bundles: synthesize, "
        "witness, classify, and coordinatize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", required=True, help="output directory")
        return p

    p = add("synth", "generate a synthetic bundle with known ground truth")
    p.add_argument(
        "--model",
        required=True,
        help="torus | klein | lens:p | rp2:p | disconnected:p | split:p",
    )
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--sets", type=int, default=None, help="cover sets (or arcs)")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--noise", type=float, default=0.0, help="fiber noise, radians")
    p.add_argument("--seed", type=int, default=0)

    for name, help_text in [
        ("witness", "estimate overlap isometries and their quality"),
        ("coordinatize", "embed samples through reduced frames"),
        ("trivialize", "assemble one global fiber coordinate"),
        ("report", "quality, persistence, and reduction-curve summary"),
    ]:
        p = add(name, help_text)
        p.add_argument("--data", required=True)
        p.add_argument("--cover", required=True)
        p.add_argument("--trivs", required=True)
        if name == "coordinatize":
            p.add_argument("--dim", type=int, required=True)
            p.add_argument("--stage", type=int, default=None)
        if name == "report":
            p.add_argument("--dims", default=None, help="comma list, e.g. 2,4,8")

    p = add("classes", "sign and integer classes of a witness")
    p.add_argument("--witness", required=True)

    p = add("euler", "pair the integer class with the fundamental class")
    p.add_argument("--classes", required=True)

    p = add("persist", "class persistence along the weight filtration")
    p.add_argument("--witness", required=True)

    p = add("unwrap", "lift a two-cluster bundle to its double cover")
    p.add_argument("--data", required=True)
    p.add_argument("--cover", required=True)
    p.add_argument("--trivs", required=True)
    p.add_argument("--clusters", required=True)

    return parser


def _emit(payload: dict, stream=None):
    print(json.dumps(payload, sort_keys=True), file=stream or sys.stdout)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    config = {}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "out"):
            continue
        if key in _INPUTS[args.command]:
            config[key] = os.path.basename(value)
        else:
            config[key] = value

    run = None
    try:
        input_paths = [getattr(args, k) for k in _INPUTS[args.command]]
        run = _Run(args.command, config, input_paths, getattr(args, "seed", None))
        run.open(args.out)
        summary = _HANDLERS[args.command](args, run)
    except SchemaError as exc:
        _emit({"error": "schema", "message": str(exc)}, sys.stderr)
        if run is not None:
            run.finish(EXIT_SCHEMA)
        return EXIT_SCHEMA
    except ObstructionError as exc:
        payload = {
            "obstruction": getattr(exc, "reason", ""),
            "message": str(exc),
        }
        _emit(payload)
        if run is not None and run.out_dir is not None:
            run.write("obstruction.json", {"schema": "circlet/obstruction", **payload})
            run.finish(EXIT_OBSTRUCTION)
        return EXIT_OBSTRUCTION
    except GuardError as exc:
        payload = {"guard": type(exc).__name__, "message": str(exc)}
        _emit(payload)
        if run is not None and run.out_dir is not None:
            run.write("guard.json", {"schema": "circlet/guard", **payload})
            run.finish(EXIT_GUARD)
        return EXIT_GUARD
    run.finish(EXIT_OK)
    _emit(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
