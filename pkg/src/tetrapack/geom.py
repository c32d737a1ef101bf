"""Low-level geometry kernel: rotations, convex hulls, volumes, separation.

Everything here is pure and stateless.  Points are numpy arrays of shape
(3,), point sets are arrays of shape (n, 3), all in model units (the
tetrahedron edge length used throughout the project is sqrt(8)).

Two tolerance regimes are used project-wide:

* ``GEOM_TOL`` (1e-9) for incidence and touching decisions,
* ``ALG_TOL`` (1e-12) for closed-form algebraic checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull as _QHull
from scipy.spatial import QhullError

GEOM_TOL = 1e-9
ALG_TOL = 1e-12

__all__ = [
    "GEOM_TOL",
    "ALG_TOL",
    "DegenerateGeometryError",
    "Plane",
    "ConvexBody",
    "Separation",
    "rotate_about_line",
    "convex_hull",
    "body_volume",
    "signed_separation",
    "ring_solid_angle",
]


class DegenerateGeometryError(ValueError):
    """Raised for inputs that have no well-defined 3d hull or basis."""


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    return pts


@dataclass(frozen=True)
class Plane:
    """Oriented plane {p : normal . p = offset} with unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, points) -> np.ndarray:
        """Signed distances, positive on the side the normal points to."""
        return np.atleast_2d(np.asarray(points, dtype=float)) @ self.normal - self.offset


@dataclass
class ConvexBody:
    """Convex polytope given by vertices plus face/edge combinatorics.

    ``faces`` are index cycles, counter-clockwise when seen from outside,
    merged so that a coplanar facet appears once (a cube has 6 faces, not
    12 triangles).  ``edges`` are sorted index pairs.
    """

    vertices: np.ndarray
    faces: tuple
    edges: tuple
    _normals: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = _as_points(self.vertices)
        self.faces = tuple(tuple(int(i) for i in f) for f in self.faces)
        self.edges = tuple(tuple(sorted((int(i), int(j)))) for i, j in self.edges)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def face_normals(self) -> np.ndarray:
        """Outward unit normals, one row per face."""
        if self._normals is None:
            cen = self.centroid
            normals = []
            for f in self.faces:
                v = self.vertices[list(f)]
                n = np.cross(v[1] - v[0], v[2] - v[0])
                n /= np.linalg.norm(n)
                if np.dot(n, v[0] - cen) < 0:
                    n = -n
                normals.append(n)
            self._normals = np.array(normals)
        return self._normals

    @property
    def edge_vectors(self) -> np.ndarray:
        return np.array([self.vertices[j] - self.vertices[i] for i, j in self.edges])

    def face_plane(self, face_index: int) -> Plane:
        n = self.face_normals[face_index]
        p0 = self.vertices[self.faces[face_index][0]]
        return Plane(n, float(n @ p0))

    def translated(self, t) -> "ConvexBody":
        return ConvexBody(self.vertices + np.asarray(t, dtype=float), self.faces, self.edges)

    def negated(self) -> "ConvexBody":
        """Point reflection through the origin (face cycles reversed to stay outward)."""
        return ConvexBody(-self.vertices, tuple(f[::-1] for f in self.faces), self.edges)

    def transformed(self, matrix) -> "ConvexBody":
        R = np.asarray(matrix, dtype=float)
        faces = self.faces
        if np.linalg.det(R) < 0:
            faces = tuple(f[::-1] for f in faces)
        return ConvexBody(self.vertices @ R.T, faces, self.edges)

    def validate(self, tol: float = GEOM_TOL) -> None:
        """Check planarity of every face and the Euler relation V - E + F = 2."""
        nv, ne, nf = len(self.vertices), len(self.edges), len(self.faces)
        if nv - ne + nf != 2:
            raise DegenerateGeometryError(f"Euler relation violated: V={nv} E={ne} F={nf}")
        for k, f in enumerate(self.faces):
            pl = self.face_plane(k)
            if np.abs(pl.signed_distance(self.vertices[list(f)])).max() > tol:
                raise DegenerateGeometryError(f"face {k} not planar within {tol}")


@dataclass
class Separation:
    """Signed separation between two convex bodies.

    ``gap`` is the minimum translation distance: positive separation
    distance when disjoint, zero when touching, negative penetration
    depth when overlapping.  ``witness`` is a plane with body A on its
    negative side and body B on its positive side (midway when the
    bodies are apart).
    """

    gap: float
    witness: Plane
    point_a: np.ndarray
    point_b: np.ndarray


def rotate_about_line(p, axis_point, axis_dir, angle: float) -> np.ndarray:
    """Rotate ``p`` about the line through ``axis_point`` along ``axis_dir``.

    Right-handed rotation (Rodrigues) by ``angle`` radians; the axis
    direction must be unit length.
    """
    k = np.asarray(axis_dir, dtype=float)
    if abs(np.linalg.norm(k) - 1.0) > 1e-12:
        raise ValueError("axis_dir must be a unit vector")
    p = np.asarray(p, dtype=float)
    o = np.asarray(axis_point, dtype=float)
    r = p - o
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    return o + r * cos_a + np.cross(k, r) * sin_a + k * (k @ r) * (1.0 - cos_a)


def _merge_coplanar(points: np.ndarray, hull: _QHull, tol: float) -> tuple:
    """Group Qhull simplices into maximal coplanar facets, as CCW cycles."""
    eqs = hull.equations  # rows (n, -d): n.x + d <= 0 inside, n outward
    groups: list[list[int]] = []
    reps: list[np.ndarray] = []
    for s in range(len(hull.simplices)):
        e = eqs[s]
        for gi, r in enumerate(reps):
            if np.abs(e - r).max() < tol * 10:
                groups[gi].append(s)
                break
        else:
            reps.append(e)
            groups.append([s])
    faces = []
    for gi, simplices in enumerate(groups):
        idx = sorted({int(i) for s in simplices for i in hull.simplices[s]})
        n = reps[gi][:3]
        # order the facet cycle by angle about its centroid, CCW seen from outside
        pts = points[idx]
        cen = pts.mean(axis=0)
        ref = pts[0] - cen
        ref -= n * (n @ ref)
        ref /= np.linalg.norm(ref)
        perp = np.cross(n, ref)
        ang = np.arctan2((pts - cen) @ perp, (pts - cen) @ ref)
        faces.append(tuple(np.array(idx)[np.argsort(ang)]))
    return tuple(faces)


def convex_hull(points) -> ConvexBody:
    """Convex hull of a 3d point set with merged coplanar facets.

    Raises DegenerateGeometryError for fewer than 4 points or inputs that
    are coplanar/collinear within Qhull's tolerance.
    """
    pts = _as_points(points)
    if len(pts) < 4:
        raise DegenerateGeometryError("need at least 4 points for a 3d hull")
    try:
        hull = _QHull(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(f"degenerate input: {exc}") from exc
    vert_idx = np.array(sorted(hull.vertices))
    remap = {int(v): i for i, v in enumerate(vert_idx)}
    vertices = pts[vert_idx]
    raw_faces = _merge_coplanar(pts, hull, GEOM_TOL)
    faces = tuple(tuple(remap[int(i)] for i in f) for f in raw_faces)
    edges = sorted({tuple(sorted((f[i], f[(i + 1) % len(f)]))) for f in faces for i in range(len(f))})
    body = ConvexBody(vertices, faces, tuple(edges))
    body.validate()
    return body


def body_volume(body: ConvexBody) -> float:
    """Volume by signed tetrahedral decomposition about the vertex centroid."""
    cen = body.centroid
    total = 0.0
    for f in body.faces:
        v = body.vertices[list(f)] - cen
        for i in range(1, len(f) - 1):
            total += np.linalg.det(np.column_stack([v[0], v[i], v[i + 1]]))
    vol = total / 6.0
    if vol < -GEOM_TOL:
        raise DegenerateGeometryError("negative volume: faces are not consistently oriented")
    return abs(vol)


def _candidate_axes(a: ConvexBody, b: ConvexBody) -> np.ndarray:
    cross = np.cross(a.edge_vectors[:, None, :], b.edge_vectors[None, :, :]).reshape(-1, 3)
    norms = np.linalg.norm(cross, axis=1)
    cross = cross[norms > 1e-12] / norms[norms > 1e-12, None]
    return np.vstack([a.face_normals, b.face_normals, cross])


def _segment_closest(p1, q1, p2, q2):
    """Closest points of two segments (clamped); returns (point1, point2)."""
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    c, bb = d1 @ r, d1 @ d2
    den = a * e - bb * bb
    s = np.clip((bb * f - c * e) / den, 0.0, 1.0) if den > 1e-15 else 0.0
    t = (bb * s + f) / e if e > 1e-15 else 0.0
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0) if a > 1e-15 else 0.0
    elif t > 1.0:
        t = 1.0
        s = np.clip((bb - c) / a, 0.0, 1.0) if a > 1e-15 else 0.0
    return p1 + s * d1, p2 + t * d2


def _point_triangle_closest(p, tri):
    """Closest point on triangle ``tri`` (3,3) to point ``p``."""
    a, b, c = tri
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return a + ab * (d1 / (d1 - d3))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return a + ac * (d2 / (d2 - d6))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))
    den = 1.0 / (va + vb + vc)
    return a + ab * (vb * den) + ac * (vc * den)


def _closest_points(a: ConvexBody, b: ConvexBody):
    """Exhaustive closest-feature scan; exact for disjoint convex polytopes."""
    best = (math.inf, None, None)
    for i, j in a.edges:
        for k, l in b.edges:
            pa, pb = _segment_closest(a.vertices[i], a.vertices[j], b.vertices[k], b.vertices[l])
            d = np.linalg.norm(pa - pb)
            if d < best[0]:
                best = (d, pa, pb)
    for body_a, body_b, flip in ((a, b, False), (b, a, True)):
        for p in body_a.vertices:
            for f in body_b.faces:
                vf = body_b.vertices[list(f)]
                for i in range(1, len(f) - 1):
                    q = _point_triangle_closest(p, np.array([vf[0], vf[i], vf[i + 1]]))
                    d = np.linalg.norm(p - q)
                    if d < best[0]:
                        best = (d, q, p) if flip else (d, p, q)
    return best[1], best[2]


def signed_separation(a: ConvexBody, b: ConvexBody) -> Separation:
    """Signed separation of two convex bodies by exhaustive axis testing.

    The candidate axis set (face normals of both bodies plus pairwise
    edge-direction cross products) decides disjointness exactly for
    polytopes; the returned gap is the minimum translation distance
    along the best axis.  Intended for the small bodies used in this
    project (tens of vertices), where the exhaustive test is both fast
    and free of iteration artifacts.
    """
    axes = _candidate_axes(a, b)
    pa = axes @ a.vertices.T
    pb = axes @ b.vertices.T
    min_a, max_a = pa.min(axis=1), pa.max(axis=1)
    min_b, max_b = pb.min(axis=1), pb.max(axis=1)
    lo = min_b - max_a  # separation with b on the positive side of the axis
    hi = min_a - max_b  # separation with b on the negative side
    sep = np.maximum(lo, hi)
    k = int(np.argmax(sep))
    gap = float(sep[k])
    n = axes[k] if lo[k] >= hi[k] else -axes[k]
    # plane midway through the projection gap, A below, B above
    off = 0.5 * (float((a.vertices @ n).max()) + float((b.vertices @ n).min()))
    witness = Plane(n, off)
    if gap >= 0:
        point_a, point_b = _closest_points(a, b)
    else:
        point_a = a.vertices[int(np.argmax(a.vertices @ n))]
        point_b = b.vertices[int(np.argmin(b.vertices @ n))]
    return Separation(gap, witness, point_a, point_b)


def ring_solid_angle(kind: str, count: int):
    """Total solid angle and local density of tetrahedra ringing a feature.

    ``edge`` rings contribute 2*acos(1/3) steradians each (the dihedral
    wedge), ``vertex`` rings contribute the regular tetrahedron's vertex
    solid angle -pi + 3*acos(1/3).  Local density is the total divided
    by the full 4*pi.
    """
    if count < 0 or int(count) != count:
        raise ValueError("count must be a non-negative integer")
    if kind == "edge":
        per = 2.0 * math.acos(1.0 / 3.0)
    elif kind == "vertex":
        per = -math.pi + 3.0 * math.acos(1.0 / 3.0)
    else:
        raise ValueError(f"unknown ring kind {kind!r}")
    total = count * per
    return total, total / (4.0 * math.pi)
