"""File formats: result documents, sweep tables, OBJ scenes, run manifests.

All floats are written with 12 significant digits, matching the
project's reporting precision, and nothing time-dependent goes into
result or table files so identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .cluster import Cluster, SwivelParams, build_cluster
from .packing import LatticeBasis, PackingResult, enumerate_neighbors

RESULT_FORMAT = "tetrapack-result v1"
_RIM_FIELDS = [f"{n}_u+" for n in "opqrs"] + [f"{n}_v-" for n in "opqrs"]

__all__ = [
    "RESULT_FORMAT",
    "RunManifest",
    "write_result",
    "read_result",
    "write_sweep_csv",
    "write_obj",
    "read_obj_objects",
    "write_manifest",
]


def _f(x: float) -> str:
    return f"{float(x):.12g}"


def _vec(v) -> str:
    return " ".join(_f(t) for t in v)


def write_result(path, result: PackingResult, command: str = "optimize",
                 variant: str = "free") -> None:
    """Key-value result document mirroring the numeric pipeline's outputs:
    swivel pair, the ten rim vertices, the basis, V, D, and the active set."""
    params = result.params
    cluster = build_cluster(params)
    lines = [RESULT_FORMAT, f"command: {command}", f"variant: {variant}",
             f"converged: {'true' if result.converged else 'false'}",
             f"u: {_f(params.u)}", f"v: {_f(params.v)}"]
    for name in "opqrs":
        lines.append(f"{name}_u+: {_vec(cluster.upper.rim[name])}")
    for name in "opqrs":
        lines.append(f"{name}_v-: {_vec(cluster.lower.rim[name])}")
    for name in "abcd":
        lines.append(f"{name}: {_vec(getattr(result.basis, name))}")
    lines.append(f"V: {_f(result.V)}")
    lines.append(f"D: {_f(result.D)}")
    labels = result.active_contacts.labels() if result.active_contacts else []
    lines.append(f"active: {' '.join(labels)}")
    lines.append(f"iterations: {result.iterations}")
    lines.append(f"min_gap: {_f(result.min_gap)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_result(path) -> dict:
    """Parse a result document back into params, basis and metadata."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != RESULT_FORMAT:
        raise ValueError(f"not a {RESULT_FORMAT} file")
    fields = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, rest = ln.partition(":")
        fields[key.strip()] = rest.strip()
    params = SwivelParams.from_uv(float(fields["u"]), float(fields["v"]))
    vecs = {name: np.array([float(t) for t in fields[name].split()]) for name in "abcd"}
    basis = LatticeBasis(vecs["a"], vecs["b"], vecs["c"], vecs["d"])
    rim = {name: np.array([float(t) for t in fields[name].split()])
           for name in _RIM_FIELDS if name in fields}
    return {
        "params": params,
        "basis": basis,
        "V": float(fields["V"]),
        "D": float(fields["D"]),
        "active": fields.get("active", "").split(),
        "converged": fields.get("converged") == "true",
        "rim": rim,
    }


def write_sweep_csv(path, samples) -> None:
    lines = ["u,v,variant,D,V,converged,active_labels"]
    for s in samples:
        labels = ";".join(s.active_labels)
        conv = "true" if s.converged else "false"
        lines.append(f"{_f(s.u)},{_f(s.v)},{s.variant},{_f(s.D)},{_f(s.V)},{conv},{labels}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _tetra_faces(vertices: np.ndarray):
    """Outward (counter-clockwise from outside) faces of one tetrahedron."""
    cen = vertices.mean(axis=0)
    faces = []
    for f in ((0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)):
        v = vertices[list(f)]
        n = np.cross(v[1] - v[0], v[2] - v[0])
        faces.append(f if n @ (v[0] - cen) > 0 else f[::-1])
    return faces


def write_obj(path, cluster: Cluster, basis: LatticeBasis = None, cutoff: float = 0.0) -> None:
    """OBJ scene: one object per placed tetrahedron, deterministic order.

    With cutoff 0 (or no basis) only the origin cluster's nine tetrahedra
    are written; otherwise every neighbor image within the cutoff follows,
    in enumeration order.
    """
    placements = [(+1, np.zeros(3))]
    if basis is not None and cutoff > 0:
        for nb in enumerate_neighbors(basis, cutoff):
            placements.append((nb.coset, nb.offset))
    lines = ["# tetrapack OBJ export"]
    base = 0
    for pi, (orient, offset) in enumerate(placements):
        for ti, tet in enumerate(cluster.tetrahedra):
            verts = orient * tet.vertices + offset
            lines.append(f"o tet_{pi:04d}_{ti}")
            for v in verts:
                lines.append(f"v {_vec(v)}")
            for f in _tetra_faces(verts):
                lines.append(f"f {base + f[0] + 1} {base + f[1] + 1} {base + f[2] + 1}")
            base += 4
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_obj_objects(path) -> list:
    """Parse an OBJ file into per-object (name, vertices (n,3), faces) tuples."""
    objects = []
    all_vertices = []
    current = None
    with open(path) as fh:
        for ln in fh:
            parts = ln.split()
            if not parts or parts[0] == "#":
                continue
            if parts[0] == "o":
                current = {"name": parts[1], "vertex_ids": [], "faces": []}
                objects.append(current)
            elif parts[0] == "v":
                all_vertices.append([float(t) for t in parts[1:4]])
                if current is not None:
                    current["vertex_ids"].append(len(all_vertices) - 1)
            elif parts[0] == "f":
                current["faces"].append(tuple(int(t) - 1 for t in parts[1:]))
    all_vertices = np.array(all_vertices)
    out = []
    for obj in objects:
        ids = obj["vertex_ids"]
        local = {g: i for i, g in enumerate(ids)}
        faces = [tuple(local[g] for g in f) for f in obj["faces"]]
        out.append((obj["name"], all_vertices[ids], faces))
    return out


@dataclass
class RunManifest:
    """Byte-level record of one CLI run (sidecar, never part of result files)."""

    command: str
    config: dict
    version: str
    timestamp: str
    input_hashes: dict
    outputs: list = field(default_factory=list)

    def validate(self) -> None:
        for out in self.outputs:
            if not os.path.exists(out) or os.path.getsize(out) == 0:
                raise ValueError(f"manifest lists missing or empty output {out}")


def write_manifest(path, command: str, config: dict, outputs, inputs=()) -> RunManifest:
    from . import __version__

    hashes = {}
    for name in inputs:
        with open(name, "rb") as fh:
            hashes[name] = hashlib.sha256(fh.read()).hexdigest()
    manifest = RunManifest(command, config, __version__,
                           time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                           hashes, list(outputs))
    manifest.validate()
    with open(path, "w") as fh:
        json.dump(manifest.__dict__, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
