"""JSON schemas, canonical serialization, and run provenance.

Every document is written in a canonical text form: keys sorted, floats
with 17 significant digits (enough to reproduce the double exactly),
newline-terminated.  Identical objects therefore serialize to identical
bytes, which is what makes output digests meaningful.

Angles travel in turns.  Isometries travel as {turn, sign} pairs,
matrices row-major.  Chart values are stored as angles, so one
serialization round trip may move a chart vector by a couple of ulps;
everything discrete round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from typing import Sequence

import numpy as np

from .cochains import Cochain
from .errors import SchemaError
from .nerve import BundleDataset, CoverSet, Nerve
from .persistence import PersistenceReport, ThresholdPair
from .witness import Trivialization
from .circle import O2
from .synthetic import SyntheticScenario

SCHEMA_PREFIX = "circlet/"


# ---------------------------------------------------------------------------
# canonical text


def _float_text(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise SchemaError("non-finite float has no canonical form; encode as null")
    s = format(float(x), ".17g")
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def canonical_text(obj, indent: int = 0) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats.

    The standard encoder gives no control over float formatting, so this
    walks the structure itself; json.loads parses the result back.
    """
    pad = " " * indent
    kid = " " * (indent + 2)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float_text(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        items = [canonical_text(x, indent + 2) for x in obj]
        if not items:
            return "[]"
        return "[\n" + ",\n".join(kid + x for x in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        rows = []
        for k in sorted(obj, key=str):
            if not isinstance(k, str):
                raise SchemaError(f"document keys must be strings, got {k!r}")
            rows.append(kid + json.dumps(k) + ": " + canonical_text(obj[k], indent + 2))
        if not rows:
            return "{}"
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    raise SchemaError(f"cannot serialize {type(obj).__name__}")


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def dump_json(obj, path: str) -> str:
    """Write the canonical form; the digest of the written bytes returns."""
    text = canonical_text(obj) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return sha256_hex(text)


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"input file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}")


# ---------------------------------------------------------------------------
# validation helpers


def _need(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{where}: missing key {key!r}")
    return doc[key]


def _check_schema(doc, name: str):
    tag = _need(doc, "schema", name)
    if tag != SCHEMA_PREFIX + name:
        raise SchemaError(
            f"expected schema {SCHEMA_PREFIX + name!r}, found {tag!r}"
        )


def _simplex(row, where: str) -> tuple:
    if not isinstance(row, list) or not all(isinstance(v, int) for v in row):
        raise SchemaError(f"{where}: simplex must be a list of integers")
    return tuple(row)


def _the_float(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{where}: expected a number")
    return float(x)


# ---------------------------------------------------------------------------
# dataset


def dataset_doc(ds: BundleDataset) -> dict:
    base_space: dict = {"kind": ds.kind}
    doc = {
        "schema": SCHEMA_PREFIX + "dataset",
        "base_space": base_space,
        "samples": [
            {"id": int(s), "base": [float(x) for x in ds.base[i]]}
            for i, s in enumerate(ds.ids)
        ],
    }
    if ds.kind == "abstract":
        doc["distances"] = [[float(x) for x in row] for row in ds.distances]
    return doc


def parse_dataset(doc) -> BundleDataset:
    _check_schema(doc, "dataset")
    kind = _need(_need(doc, "base_space", "dataset"), "kind", "base_space")
    rows = _need(doc, "samples", "dataset")
    ids = []
    base = []
    for row in rows:
        ids.append(_need(row, "id", "sample"))
        base.append([_the_float(x, "sample base") for x in _need(row, "base", "sample")])
    dists = None
    if kind == "abstract":
        dists = np.array(
            [[_the_float(x, "distances") for x in r] for r in _need(doc, "distances", "dataset")]
        )
    arr = np.array(base, dtype=float)
    if arr.size == 0:
        arr = arr.reshape(len(ids), 0)
    try:
        return BundleDataset(ids=tuple(ids), base=arr, kind=kind, distances=dists)
    except ValueError as exc:
        raise SchemaError(f"dataset: {exc}")


# ---------------------------------------------------------------------------
# cover


def cover_doc(cover: Sequence[CoverSet]) -> dict:
    rows = []
    for c in sorted(cover, key=lambda c: c.id):
        row: dict = {"id": int(c.id), "members": sorted(int(s) for s in c.members)}
        if c.center is not None:
            row["center"] = [float(x) for x in c.center]
        if c.radius is not None:
            row["radius"] = float(c.radius)
        if c.clipped:
            row["clipped"] = True
        rows.append(row)
    return {"schema": SCHEMA_PREFIX + "cover", "sets": rows}


def parse_cover(doc) -> list[CoverSet]:
    _check_schema(doc, "cover")
    out = []
    for row in _need(doc, "sets", "cover"):
        out.append(
            CoverSet(
                id=_need(row, "id", "cover set"),
                members=frozenset(_need(row, "members", "cover set")),
                center=np.array(row["center"], dtype=float) if "center" in row else None,
                radius=_the_float(row["radius"], "radius") if "radius" in row else None,
                clipped=bool(row.get("clipped", False)),
            )
        )
    return out


# ---------------------------------------------------------------------------
# trivialization


def trivs_doc(trivs: Trivialization) -> dict:
    rows = []
    for j in trivs.sets():
        table = trivs.angle_table(j)
        rows.append(
            {
                "id": int(j),
                "values": [
                    {"sample": int(s), "angle_turns": float(table[s]) % 1.0}
                    for s in sorted(table)
                ],
            }
        )
    return {"schema": SCHEMA_PREFIX + "trivs", "sets": rows}


def parse_trivs(doc) -> Trivialization:
    _check_schema(doc, "trivs")
    tables = {}
    for row in _need(doc, "sets", "trivs"):
        j = _need(row, "id", "trivs set")
        tables[j] = {
            v["sample"]: _the_float(
                _need(v, "angle_turns", "trivs value"), "angle_turns"
            )
            for v in _need(row, "values", "trivs set")
        }
    return Trivialization.from_angles(tables)


# ---------------------------------------------------------------------------
# nerve (embedded object, not a standalone schema)


def nerve_doc(nerve: Nerve) -> dict:
    doc: dict = {
        "simplices": {
            str(p): [list(s) for s in simps]
            for p, simps in nerve.simplices.items()
            if simps
        },
        "weights": [
            {"simplex": list(s), "weight": float(w)}
            for s, w in sorted(nerve.weights.items())
        ],
    }
    if nerve.order is not None:
        doc["order"] = [list(s) for s in nerve.order]
    if nerve.perturbations:
        doc["perturbations"] = [
            {"simplex": list(s), "offset": float(v)}
            for s, v in sorted(nerve.perturbations.items())
        ]
    return doc


def parse_nerve(doc) -> Nerve:
    raw = _need(doc, "simplices", "nerve")
    simplices = {}
    for p, simps in raw.items():
        try:
            dim = int(p)
        except ValueError:
            raise SchemaError(f"nerve: bad dimension key {p!r}")
        simplices[dim] = [_simplex(s, "nerve") for s in simps]
    nerve = Nerve(simplices=simplices)
    for row in doc.get("weights", []):
        s = _simplex(_need(row, "simplex", "weight row"), "weight row")
        nerve.weights[s] = _the_float(_need(row, "weight", "weight row"), "weight")
    if "order" in doc:
        nerve.order = [_simplex(s, "order") for s in doc["order"]]
        nerve.index = {s: i + 1 for i, s in enumerate(nerve.order)}
    for row in doc.get("perturbations", []):
        s = _simplex(row["simplex"], "perturbation row")
        nerve.perturbations[s] = _the_float(row["offset"], "offset")
    return nerve


# ---------------------------------------------------------------------------
# witness


def witness_doc(witness: Cochain, quality: dict | None = None) -> dict:
    doc = {
        "schema": SCHEMA_PREFIX + "witness",
        "nerve": nerve_doc(witness.nerve),
        "values": [
            {"simplex": list(e), "turn": float(om.turn), "sign": int(om.sign)}
            for e, om in sorted(witness.values.items())
        ],
    }
    if quality is not None:
        doc["quality"] = quality
    return doc


def parse_witness(doc) -> tuple[Cochain, dict | None]:
    _check_schema(doc, "witness")
    nerve = parse_nerve(_need(doc, "nerve", "witness"))
    vals = {}
    for row in _need(doc, "values", "witness"):
        e = _simplex(_need(row, "simplex", "witness value"), "witness value")
        sign = _need(row, "sign", "witness value")
        if sign not in (1, -1):
            raise SchemaError(f"witness value on {e}: sign must be +-1")
        vals[e] = O2(_the_float(_need(row, "turn", "witness value"), "turn"), sign)
    try:
        witness = Cochain(nerve, 1, "O2", vals)
    except Exception as exc:
        raise SchemaError(f"witness: {exc}")
    return witness, doc.get("quality")


# ---------------------------------------------------------------------------
# characteristic classes


def classes_doc(
    nerve: Nerve,
    sw: Cochain,
    euler: Cochain,
    lift: Cochain,
    bracket_margin: float,
    sw_coboundary: bool,
    defect: float,
) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "classes",
        "nerve": nerve_doc(nerve),
        "sw": [
            {"simplex": list(e), "sign": int(v)} for e, v in sorted(sw.values.items())
        ],
        "euler": [
            {"simplex": list(s), "value": int(v)}
            for s, v in sorted(euler.values.items())
        ],
        "lift": [
            {"simplex": list(e), "turn": float(v)}
            for e, v in sorted(lift.values.items())
        ],
        "bracket_margin": None if math.isinf(bracket_margin) else float(bracket_margin),
        "sw_coboundary": bool(sw_coboundary),
        "cocycle_defect": float(defect),
    }


def parse_classes(doc) -> dict:
    _check_schema(doc, "classes")
    nerve = parse_nerve(_need(doc, "nerve", "classes"))
    sw_vals = {
        _simplex(r["simplex"], "sw row"): int(_need(r, "sign", "sw row"))
        for r in _need(doc, "sw", "classes")
    }
    sw = Cochain(nerve, 1, "Z2", sw_vals)
    euler = Cochain(
        nerve,
        2,
        "Z",
        {
            _simplex(r["simplex"], "euler row"): int(_need(r, "value", "euler row"))
            for r in _need(doc, "euler", "classes")
        },
        twist=sw,
    )
    lift = Cochain(
        nerve,
        1,
        "R",
        {
            _simplex(r["simplex"], "lift row"): _the_float(r["turn"], "lift turn")
            for r in _need(doc, "lift", "classes")
        },
        twist=sw,
    )
    margin = doc.get("bracket_margin")
    return {
        "nerve": nerve,
        "sw": sw,
        "euler": euler,
        "lift": lift,
        "bracket_margin": math.inf if margin is None else float(margin),
        "sw_coboundary": bool(_need(doc, "sw_coboundary", "classes")),
        "cocycle_defect": _the_float(_need(doc, "cocycle_defect", "classes"), "defect"),
    }


# ---------------------------------------------------------------------------
# persistence


def _pair_doc(p: ThresholdPair) -> dict:
    return {
        "cobirth_index": int(p.cobirth_index),
        "cobirth_weight": float(p.cobirth_weight),
        "codeath_index": int(p.codeath_index),
        "codeath_weight": float(p.codeath_weight),
    }


def _parse_pair(doc, where: str) -> ThresholdPair:
    return ThresholdPair(
        cobirth_index=int(_need(doc, "cobirth_index", where)),
        cobirth_weight=_the_float(_need(doc, "cobirth_weight", where), where),
        codeath_index=int(_need(doc, "codeath_index", where)),
        codeath_weight=_the_float(_need(doc, "codeath_weight", where), where),
    )


def persistence_doc(report: PersistenceReport) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "persistence",
        "sw": _pair_doc(report.sw),
        "euler": _pair_doc(report.euler),
        "w_max": float(report.w_max),
        "stage_sizes": [
            {"dim": int(p), "count": int(n)}
            for p, n in sorted(report.stage_sizes.items())
        ],
    }


def parse_persistence(doc) -> PersistenceReport:
    _check_schema(doc, "persistence")
    return PersistenceReport(
        sw=_parse_pair(_need(doc, "sw", "persistence"), "sw pair"),
        euler=_parse_pair(_need(doc, "euler", "persistence"), "euler pair"),
        w_max=_the_float(_need(doc, "w_max", "persistence"), "w_max"),
        stage_sizes={
            int(r["dim"]): int(r["count"])
            for r in _need(doc, "stage_sizes", "persistence")
        },
    )


# ---------------------------------------------------------------------------
# cluster labels


def clusters_doc(clusters: dict) -> dict:
    rows = []
    for j in sorted(clusters):
        a, b = clusters[j]
        rows.append(
            {
                "id": int(j),
                "clusters": [sorted(int(s) for s in a), sorted(int(s) for s in b)],
            }
        )
    return {"schema": SCHEMA_PREFIX + "clusters", "sets": rows}


def parse_clusters(doc) -> dict:
    _check_schema(doc, "clusters")
    out = {}
    for row in _need(doc, "sets", "clusters"):
        pair = _need(row, "clusters", "cluster row")
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError("cluster row: need exactly two clusters")
        out[_need(row, "id", "cluster row")] = (
            frozenset(pair[0]),
            frozenset(pair[1]),
        )
    return out


# ---------------------------------------------------------------------------
# ground-truth scenario


def scenario_doc(sc: SyntheticScenario) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "scenario",
        "model": sc.model,
        "n_samples": int(sc.n_samples),
        "cover_sets": int(sc.cover_sets),
        "cover_radius": float(sc.cover_radius),
        "noise": float(sc.noise),
        "seed": int(sc.seed),
        "sw_trivial": bool(sc.sw_trivial),
        "euler_number": int(sc.euler_number),
    }


def parse_scenario(doc) -> SyntheticScenario:
    _check_schema(doc, "scenario")
    return SyntheticScenario(
        model=_need(doc, "model", "scenario"),
        n_samples=int(_need(doc, "n_samples", "scenario")),
        cover_sets=int(_need(doc, "cover_sets", "scenario")),
        cover_radius=_the_float(_need(doc, "cover_radius", "scenario"), "radius"),
        noise=_the_float(_need(doc, "noise", "scenario"), "noise"),
        seed=int(_need(doc, "seed", "scenario")),
        sw_trivial=bool(_need(doc, "sw_trivial", "scenario")),
        euler_number=int(_need(doc, "euler_number", "scenario")),
    )


# ---------------------------------------------------------------------------
# coordinates


def global_coords_doc(g) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "coords",
        "kind": "global",
        "angles": [
            {"id": int(s), "angle_turns": float(g.angle[s]) % 1.0}
            for s in sorted(g.angle)
        ],
        "phi": [{"set": int(j), "sign": int(v)} for j, v in sorted(g.phi.items())],
        "beta": [
            {"simplex": list(e), "value": int(v)} for e, v in sorted(g.beta.items())
        ],
        "residual": float(g.residual),
    }


def frame_coords_doc(bm) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "coords",
        "kind": "frame",
        "dim": int(bm.dim),
        "stage": None if bm.stage is None else int(bm.stage),
        "method": bm.method,
        "overlap_residual": float(bm.overlap_residual),
        "plane_residual": float(bm.plane_residual),
        "vectors": [
            {"id": int(s), "v": [float(x) for x in v]}
            for s, v in sorted(bm.vectors.items())
        ],
    }


def parse_coords(doc) -> dict:
    _check_schema(doc, "coords")
    kind = _need(doc, "kind", "coords")
    if kind == "global":
        return {
            "kind": "global",
            "angles": {
                r["id"]: _the_float(r["angle_turns"], "angle")
                for r in _need(doc, "angles", "coords")
            },
            "phi": {r["set"]: int(r["sign"]) for r in _need(doc, "phi", "coords")},
            "beta": {
                _simplex(r["simplex"], "beta row"): int(r["value"])
                for r in _need(doc, "beta", "coords")
            },
            "residual": _the_float(_need(doc, "residual", "coords"), "residual"),
        }
    if kind == "frame":
        return {
            "kind": "frame",
            "dim": int(_need(doc, "dim", "coords")),
            "stage": doc.get("stage"),
            "method": _need(doc, "method", "coords"),
            "overlap_residual": _the_float(
                _need(doc, "overlap_residual", "coords"), "overlap"
            ),
            "plane_residual": _the_float(
                _need(doc, "plane_residual", "coords"), "plane"
            ),
            "vectors": {
                r["id"]: np.array(r["v"], dtype=float)
                for r in _need(doc, "vectors", "coords")
            },
        }
    raise SchemaError(f"coords: unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# provenance


def file_digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return sha256_hex(fh.read())
    except FileNotFoundError:
        raise SchemaError(f"input file not found: {path}")


def input_rows(paths: Sequence[str]) -> list[dict]:
    return [
        {"path": os.path.basename(p), "sha256": file_digest(p)} for p in paths
    ]


def provenance_digest(command: str, config: dict, inputs: list[dict], seed) -> str:
    core = {
        "command": command,
        "config_hash": sha256_hex(canonical_text(config)),
        "inputs": inputs,
        "seed": seed,
    }
    return sha256_hex(canonical_text(core))


def manifest_doc(
    command: str,
    config: dict,
    inputs: list[dict],
    seed,
    timings: list[tuple[str, float]],
    outputs: list[dict] | None = None,
) -> dict:
    return {
        "schema": SCHEMA_PREFIX + "manifest",
        "command": command,
        "config": config,
        "config_hash": sha256_hex(canonical_text(config)),
        "inputs": inputs,
        "seed": seed,
        "digest": provenance_digest(command, config, inputs, seed),
        "versions": {
            "circlet": _package_version(),
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "timings": [
            {"step": name, "seconds": float(sec)} for name, sec in timings
        ],
        "outputs": outputs or [],
    }


def _package_version() -> str:
    from . import __version__

    return __version__
