"""Deterministic artifact I/O: CSV, JSON reports, and binary snapshots.

Every artifact is self-describing: JSON files embed a `meta` block (config
hash, grid metadata, code version); CSV files start with a single `# meta:`
comment line followed by the RFC-4180 header row.  Floats are written with
repr-level precision so reruns with the same config and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .velocity_space import DistributionField, SpatialGrid, VelocityGrid

FLOAT_FMT = "%.17g"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(canonical_json(resolved).encode()).hexdigest()[:16]


def write_json(path, obj, meta=None) -> None:
    payload = dict(obj)
    if meta is not None:
        payload["meta"] = meta
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2,
                                     allow_nan=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_csv(path, header, rows, meta=None) -> None:
    lines = []
    if meta is not None:
        lines.append("# meta: " + canonical_json(meta))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(
            (FLOAT_FMT % v) if isinstance(v, (float, np.floating)) else str(v)
            for v in row))
    Path(path).write_text("\r\n".join(lines) + "\r\n")


def write_snapshot(path, f: DistributionField, meta=None) -> None:
    """JSON header line + little-endian float64 row-major payload."""
    header = {
        "shape": list(f.values.shape),
        "time": f.time,
        "frame": f.frame,
        "xgrid": f.xgrid.metadata(),
        "vgrid": f.vgrid.metadata(),
    }
    if meta is not None:
        header["meta"] = meta
    blob = canonical_json(header).encode() + b"\n"
    data = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    Path(path).write_bytes(blob + data)


def read_snapshot(path) -> DistributionField:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    shape = tuple(header["shape"])
    values = np.frombuffer(raw[nl + 1:], dtype="<f8").reshape(shape).copy()
    xg = SpatialGrid(lo=header["xgrid"]["lo"], hi=header["xgrid"]["hi"],
                     nx=header["xgrid"]["nx"])
    vg = _grid_from_metadata(header["vgrid"])
    return DistributionField(values=values, xgrid=xg, vgrid=vg,
                             frame=header["frame"], time=header["time"])


def _grid_from_metadata(vmeta) -> VelocityGrid:
    counts = tuple(vmeta["counts"])
    axes = []
    axis_weights = []
    extent = np.array(vmeta["extent"], dtype=float)
    spacing = np.empty(3)
    for a in range(3):
        pts = np.linspace(extent[a, 0], extent[a, 1], counts[a])
        h = pts[1] - pts[0]
        w = np.full(counts[a], h)
        w[0] *= 0.5
        w[-1] *= 0.5
        axes.append(pts)
        axis_weights.append(w)
        spacing[a] = h
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    wx, wy, wz = np.meshgrid(*axis_weights, indexing="ij")
    return VelocityGrid(nodes=nodes, weights=(wx * wy * wz).ravel(),
                        axes=tuple(axes), counts=counts, extent=extent,
                        spacing=spacing, rule=vmeta.get("rule", "product_trapezoid"))
