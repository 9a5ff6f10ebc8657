"""On-disk formats for measures, gauges, regions, and grid fields.

Measure:  {"dim": N, "box": {"origin": [...], "side": S},
           "atoms": [{"x": [...], "m": ...}, ...]}
Signed:   {"pos": <measure>, "neg": <measure>}
Gauge:    {"type": "power", "s": ..., "normalized": ...}
        | {"type": "power_log", "s": ..., "beta": ...}
        | {"type": "table", "knots": [[t, h], ...]}
Region:   [{"level": l, "index": [...]}, ...]
Field:    sidecar pair <stem>.json (header with dim/level/rank/box) and
          <stem>.f64 (raw little-endian float64, row-major, fastest axis
          last).

Floats round-trip bit-exact: json emits repr(float), which Python parses
back to the identical double.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dyadic import Box, DyadicCube, Region
from .fields import GridField
from .gauges import Gauge, PowerGauge, PowerLogGauge, TableGauge
from .measures import AtomicMeasure, SignedAtomicMeasure, empty_measure


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _load(path):
    return json.loads(Path(path).read_text())


# -- measures ---------------------------------------------------------------

def measure_to_dict(mu: AtomicMeasure) -> dict:
    return {
        "dim": mu.dim,
        "box": {"origin": list(mu.box.origin), "side": mu.box.side},
        "atoms": [{"x": list(map(float, x)), "m": float(m)} for x, m in zip(mu.positions, mu.masses)],
    }


def measure_from_dict(d: dict) -> AtomicMeasure:
    box = Box(tuple(d["box"]["origin"]), d["box"]["side"])
    if int(d["dim"]) != box.dim:
        raise ValueError("measure dim disagrees with box origin length")
    atoms = d.get("atoms", [])
    if not atoms:
        return empty_measure(box)
    return AtomicMeasure(box, [a["x"] for a in atoms], [a["m"] for a in atoms])


def write_measure(mu, path) -> None:
    if isinstance(mu, SignedAtomicMeasure):
        _dump({"pos": measure_to_dict(mu.positive), "neg": measure_to_dict(mu.negative)}, path)
    else:
        _dump(measure_to_dict(mu), path)


def read_measure(path):
    d = _load(path)
    if "pos" in d and "neg" in d:
        return SignedAtomicMeasure(measure_from_dict(d["pos"]), measure_from_dict(d["neg"]))
    return measure_from_dict(d)


# -- gauges -----------------------------------------------------------------

def gauge_to_dict(g: Gauge) -> dict:
    if isinstance(g, PowerGauge):
        return {"type": "power", "s": g.s, "normalized": g.normalized}
    if isinstance(g, PowerLogGauge):
        return {"type": "power_log", "s": g.s, "beta": g.beta}
    if isinstance(g, TableGauge):
        return {"type": "table", "knots": [[t, v] for t, v in g.knots]}
    raise ValueError(f"unknown gauge {g!r}")


def gauge_from_dict(d: dict) -> Gauge:
    kind = d["type"]
    if kind == "power":
        return PowerGauge(s=float(d["s"]), normalized=bool(d.get("normalized", False)))
    if kind == "power_log":
        return PowerLogGauge(s=float(d["s"]), beta=float(d["beta"]))
    if kind == "table":
        return TableGauge(d["knots"])
    raise ValueError(f"unknown gauge type {kind!r}")


def write_gauge(g: Gauge, path) -> None:
    _dump(gauge_to_dict(g), path)


def read_gauge(path) -> Gauge:
    return gauge_from_dict(_load(path))


# -- regions ----------------------------------------------------------------

def region_to_list(region: Region) -> list:
    return [{"level": q.level, "index": list(q.index)} for q in region]


def write_region(region: Region, path) -> None:
    _dump(region_to_list(region), path)


def read_region(path, dim: int | None = None) -> Region:
    entries = _load(path)
    cubes = [DyadicCube(e["level"], tuple(e["index"])) for e in entries]
    if dim is None:
        if not cubes:
            raise ValueError("empty region file needs an explicit dim")
        dim = len(cubes[0].index)
    return Region(dim, cubes)


# -- grid fields ------------------------------------------------------------

def field_paths(stem):
    stem = Path(stem)
    if stem.suffix == ".json":
        stem = stem.with_suffix("")
    return stem.with_suffix(".json"), stem.with_suffix(".f64")


def write_field(field: GridField, stem) -> tuple:
    header_path, data_path = field_paths(stem)
    header = {
        "dim": field.dim,
        "level": field.level,
        "rank": field.rank,
        "box": {"origin": list(field.box.origin), "side": field.box.side},
        "data": data_path.name,
    }
    _dump(header, header_path)
    data_path.write_bytes(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return header_path, data_path


def read_field(stem) -> GridField:
    header_path, data_path = field_paths(stem)
    header = _load(header_path)
    box = Box(tuple(header["box"]["origin"]), header["box"]["side"])
    n = 2 ** int(header["level"])
    shape = (n,) * box.dim
    if header["rank"] == "vector":
        shape = (box.dim,) + shape
    raw = np.frombuffer((header_path.parent / header["data"]).read_bytes(), dtype="<f8")
    return GridField(box, int(header["level"]), raw.reshape(shape).copy())
