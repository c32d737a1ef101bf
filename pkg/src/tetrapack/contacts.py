"""Contact detection and the labeled constraint sets G and H.

Neighboring half-clusters touch in two ways: transverse edge-to-edge
inside a layer, and partial face-to-face between adjacent layers (where
the bodies are point reflections of each other, so the touching facets
are parallel).  Both kinds reduce to an affine gap along a direction
that is fixed by the cluster shape alone:

* edge-edge: the unit cross product of the two edge directions,
* face-face: the outward facet normal.

``classify_active`` scans every near-neighbor pair class of a packing
and labels the touching ones.  Labels follow the lattice coordinates of
the neighbor offset (subscript 0/a/b/a+b/a-b) and the layer relation
(superscript 0 in-layer, + above, - below).  In-layer contacts between
an upper and a lower half-cluster form the H family; everything else is
G.  A converged family packing activates exactly ten G contacts, plus
up to two H contacts near the density maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cluster import Cluster
from .packing import LatticeBasis, default_cutoff

ACTIVE_TOL = 1e-6
_FACE_PARALLEL_TOL = 1e-7

__all__ = [
    "ACTIVE_TOL",
    "ContactConstraint",
    "ContactSolution",
    "ContactSet",
    "PairClass",
    "PairTable",
    "edge_edge_gap",
    "face_face_gap",
    "classify_active",
]


@dataclass(frozen=True)
class ContactConstraint:
    """One contact equation between the origin cluster and a neighbor image.

    ``body_a``/``body_b`` name the half-clusters ('upper'/'lower'); the
    neighbor offset is 2*alpha*a + 2*beta*b + gamma*(c-d), plus c when
    ``coset`` is -1.  Features are vertex-index pairs (edges) or face
    indices into the canonical half-cluster hull.
    """

    kind: str  # 'edge_edge' | 'face_face'
    body_a: str
    body_b: str
    coset: int
    coords: tuple
    feature_a: object
    feature_b: object
    label: str


@dataclass
class ContactSolution:
    """Solved contact parameters: s, t, the contact point, and the signed gap."""

    s: float
    t: float
    point: np.ndarray
    gap: float
    parallel: bool = False


@dataclass
class ContactSet:
    constraints: list
    solutions: list

    def labels(self) -> list:
        return [c.label for c in self.constraints]

    def by_label(self, label: str) -> ContactConstraint:
        for c in self.constraints:
            if c.label == label:
                return c
        raise KeyError(label)

    def family(self, family: str) -> list:
        return [c for c in self.constraints if c.label.startswith(family)]

    def __len__(self):
        return len(self.constraints)


def edge_edge_gap(edge_a, edge_b, w=(0.0, 0.0, 0.0), toward=None) -> ContactSolution:
    """Signed gap between the lines of two segments, second one shifted by w.

    Solves s*a + (1-s)*b = t*c + (1-t)*d + w in the least-distance sense;
    the gap is measured along the common normal, oriented by ``toward``
    (typically from body A to body B) so that the separated side is
    positive.  Without a hint the gap is reported non-negative.  Parallel
    edges are flagged and get the plane-to-plane distance instead.
    """
    a, b = (np.asarray(p, dtype=float) for p in edge_a)
    c, d = (np.asarray(p, dtype=float) for p in edge_b)
    w = np.asarray(w, dtype=float)
    c, d = c + w, d + w
    da, db = a - b, c - d
    n = np.cross(da, db)
    nn = np.linalg.norm(n)
    if nn < 1e-12 * np.linalg.norm(da) * np.linalg.norm(db):
        # parallel: distance between the lines, no crossing parameters
        r = c - b
        perp = r - da * (r @ da) / (da @ da)
        return ContactSolution(math.nan, math.nan, 0.5 * (b + c), float(np.linalg.norm(perp)), True)
    n = n / nn
    # closest points of the two lines
    r = c - b  # note: line A point at s=0 is b, line B point at t=0 is d
    r0 = b - d
    A = np.array([[da @ da, -(da @ db)], [da @ db, -(db @ db)]])
    rhs = np.array([-(da @ r0), -(db @ r0)])
    s, t = np.linalg.solve(A, rhs)
    pa = b + s * da
    pb = d + t * db
    if toward is not None:
        if n @ np.asarray(toward, dtype=float) < 0:
            n = -n
    else:
        if n @ (pb - pa) < 0:
            n = -n
    gap = float(n @ (pb - pa))
    return ContactSolution(float(s), float(t), 0.5 * (pa + pb), gap)


def _frame_coords(facet: np.ndarray, point: np.ndarray):
    """(s, t, margin) of a point in the frame v0 + s*(v1-v0) + t*(v2-v0)."""
    e1, e2 = facet[1] - facet[0], facet[2] - facet[0]
    G = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
    rhs = np.array([e1 @ (point - facet[0]), e2 @ (point - facet[0])])
    s, t = np.linalg.solve(G, rhs)
    return float(s), float(t), min(s, t, 1.0 - s - t)


def face_face_gap(face_a, face_b, w=(0.0, 0.0, 0.0), normal=None) -> ContactSolution:
    """Signed inter-plane distance of two parallel facets, second shifted by w.

    The gap is measured along face A's normal (its outward normal when
    called on packing facets, the counter-clockwise normal otherwise).
    A partial overlap puts some vertex of one facet inside the other;
    (s, t) express that designated vertex in the containing facet's
    frame spanned by its first two edge vectors, so a triangle contact
    is interior when s, t >= 0 and s + t <= 1.  ``face_b`` may also be a
    bare point (or point set), which is then located in face A's frame.
    """
    fa = np.asarray(face_a, dtype=float)
    fb = np.atleast_2d(np.asarray(face_b, dtype=float)) + np.asarray(w, dtype=float)
    if normal is None:
        normal = np.cross(fa[1] - fa[0], fa[2] - fa[0])
        normal = normal / np.linalg.norm(normal)
    if fb.shape[0] >= 3:
        nb = np.cross(fb[1] - fb[0], fb[2] - fb[0])
        nb = nb / np.linalg.norm(nb)
        if abs(abs(nb @ normal) - 1.0) > _FACE_PARALLEL_TOL:
            raise ValueError("facets are not parallel")
    gap = float(np.mean(fb @ normal) - np.mean(fa @ normal))
    candidates = [(fa, vb, -0.5) for vb in fb]
    if fb.shape[0] >= 3:
        candidates += [(fb, va, +0.5) for va in fa]
    best = None
    for facet, point, shift in candidates:
        s, t, margin = _frame_coords(facet, point)
        if best is None or margin > best[0]:
            best = (margin, s, t, point + normal * gap * shift)
    if best[0] < 0 and fb.shape[0] >= 3:
        # partial overlap with no interior vertex (two point-reflected
        # triangles can overlap star-fashion): fall back to a pair of
        # in-plane edges crossing in their interiors
        crossing = _inplane_edge_crossing(fa, fb, normal)
        if crossing is not None:
            s, t, point = crossing
            return ContactSolution(s, t, point - normal * gap / 2.0, gap)
    _, s, t, mid = best
    return ContactSolution(s, t, mid, gap)


def _inplane_edge_crossing(fa: np.ndarray, fb: np.ndarray, normal: np.ndarray):
    """Most interior crossing of projected facet edges; None if disjoint."""
    ref = fa[1] - fa[0]
    ref = ref - normal * (ref @ normal)
    ref /= np.linalg.norm(ref)
    perp = np.cross(normal, ref)
    to2d = lambda pts: np.column_stack([pts @ ref, pts @ perp])
    A2, B2 = to2d(fa), to2d(fb)
    best = None
    for i in range(len(A2)):
        p, pq = A2[i], A2[(i + 1) % len(A2)] - A2[i]
        for j in range(len(B2)):
            q, qr = B2[j], B2[(j + 1) % len(B2)] - B2[j]
            den = pq[0] * qr[1] - pq[1] * qr[0]
            if abs(den) < 1e-14:
                continue
            rhs = q - p
            s = (rhs[0] * qr[1] - rhs[1] * qr[0]) / den
            t = (rhs[0] * pq[1] - rhs[1] * pq[0]) / den
            margin = min(s, 1.0 - s, t, 1.0 - t)
            if best is None or margin > best[0]:
                point = fa[i] + s * (fa[(i + 1) % len(fa)] - fa[i])
                best = (margin, s, t, point)
    if best is None or best[0] < 0:
        return None
    return best[1], best[2], best[3]


# ---------------------------------------------------------------------------
# pair classes and the exhaustive axis tables


@dataclass(frozen=True)
class PairClass:
    """One translation class of half-cluster pairs, referenced to the origin."""

    body_a: str  # 'upper' | 'lower', always at the origin, orientation +1
    body_b: str
    coset: int
    coords: tuple

    @property
    def key(self):
        return (self.body_a, self.body_b, self.coset)

    def offset(self, basis: LatticeBasis) -> np.ndarray:
        return basis.offset(self.coset, self.coords)

    def offset_jacobian(self) -> np.ndarray:
        """d(offset)/d(a,b,c,d) as a constant 3x12 matrix."""
        al, be, ga = self.coords
        J = np.zeros((3, 12))
        I = np.eye(3)
        J[:, 0:3] = 2.0 * al * I
        J[:, 3:6] = 2.0 * be * I
        J[:, 6:9] = (ga + (1 if self.coset == -1 else 0)) * I
        J[:, 9:12] = -ga * I
        return J


class PairTable:
    """Precomputed axis projections for the six half-cluster pair types.

    The hull shapes depend only on the cluster, so for a pair type the
    candidate separating axes and the per-axis vertex projections are
    constants; the gap for a translated image is a maximum of affine
    functions of the offset.  This is what makes the lattice optimization
    cheap: one matrix-vector product per pair per evaluation.
    """

    def __init__(self, cluster: Cluster):
        self.cluster = cluster
        hulls = {
            ("upper", +1): cluster.upper.hull,
            ("lower", +1): cluster.lower.hull,
            ("upper", -1): cluster.upper.hull.negated(),
            ("lower", -1): cluster.lower.hull.negated(),
        }
        self.hulls = hulls
        self._tables = {}
        for a_side in ("upper", "lower"):
            for b_side in ("upper", "lower"):
                for coset in (+1, -1):
                    if (a_side, b_side, coset) not in self._pair_keys():
                        continue
                    A, B = hulls[(a_side, +1)], hulls[(b_side, coset)]
                    cross = np.cross(A.edge_vectors[:, None, :], B.edge_vectors[None, :, :]).reshape(-1, 3)
                    norms = np.linalg.norm(cross, axis=1)
                    cross = cross[norms > 1e-12] / norms[norms > 1e-12, None]
                    axes = np.vstack([A.face_normals, B.face_normals, cross])
                    pa = axes @ A.vertices.T
                    pb = axes @ B.vertices.T
                    self._tables[(a_side, b_side, coset)] = (
                        axes,
                        pa.min(axis=1),
                        pa.max(axis=1),
                        pb.min(axis=1),
                        pb.max(axis=1),
                    )

    @staticmethod
    def _pair_keys():
        # unordered pair classes referenced to the origin cluster; the
        # missing combinations are translates/reflections of these
        return (
            ("upper", "upper", +1),
            ("lower", "lower", +1),
            ("upper", "lower", +1),
            ("upper", "upper", -1),
            ("upper", "lower", -1),
            ("lower", "lower", -1),
        )

    def classes(self, basis: LatticeBasis, cutoff: float) -> list:
        """Deduplicated pair classes within the cutoff.

        Same-side positive pairs are symmetric under offset negation and
        are kept once; upper-lower positive pairs are distinct for w and
        -w; negative-coset pairs are self-symmetric (point reflection).
        """
        from .packing import enumerate_neighbors

        out = []
        for nb in enumerate_neighbors(basis, cutoff):
            if nb.coset == +1:
                if nb.coords > tuple(-x for x in nb.coords):
                    out.append(PairClass("upper", "upper", +1, nb.coords))
                    out.append(PairClass("lower", "lower", +1, nb.coords))
                out.append(PairClass("upper", "lower", +1, nb.coords))
            else:
                out.append(PairClass("upper", "upper", -1, nb.coords))
                out.append(PairClass("upper", "lower", -1, nb.coords))
                out.append(PairClass("lower", "lower", -1, nb.coords))
        return out

    def gap(self, pair: PairClass, w) -> tuple:
        """(gap, axis, const): gap = const + axis . w, maximized over axes."""
        axes, min_a, max_a, min_b, max_b = self._tables[pair.key]
        proj = axes @ np.asarray(w, dtype=float)
        lo = min_b + proj - max_a
        hi = min_a - (max_b + proj)
        k_lo = int(np.argmax(lo))
        k_hi = int(np.argmax(hi))
        if lo[k_lo] >= hi[k_hi]:
            return float(lo[k_lo]), axes[k_lo], float(min_b[k_lo] - max_a[k_lo])
        return float(hi[k_hi]), -axes[k_hi], float(min_a[k_hi] - max_b[k_hi])

    def min_gap(self, basis: LatticeBasis, cutoff: float) -> float:
        gaps = [self.gap(p, p.offset(basis))[0] for p in self.classes(basis, cutoff)]
        return min(gaps) if gaps else math.inf

    # -- feature identification ------------------------------------------------

    def identify_features(self, pair: PairClass, basis: LatticeBasis, axis) -> tuple:
        """Resolve the touching feature pair behind a witness axis.

        Returns ('face_face', face_a, face_b) when the axis coincides with
        an (anti-)parallel facet pair on both bodies, otherwise scans edge
        pairs for the transverse contact ('edge_edge', (i,j), (k,l)).
        """
        A = self.hulls[(pair.body_a, +1)]
        B = self.hulls[(pair.body_b, pair.coset)]
        axis = np.asarray(axis, dtype=float)
        dots_a = A.face_normals @ axis
        dots_b = B.face_normals @ axis
        if dots_a.max() > 1 - 1e-9 and (-dots_b).max() > 1 - 1e-9:
            return ("face_face", int(np.argmax(dots_a)), int(np.argmax(-dots_b)))
        w = pair.offset(basis)
        best = None
        for ea in A.edges:
            va = (A.vertices[ea[0]], A.vertices[ea[1]])
            for eb in B.edges:
                vb = (B.vertices[eb[0]], B.vertices[eb[1]])
                n = np.cross(va[1] - va[0], vb[1] - vb[0])
                nn = np.linalg.norm(n)
                if nn < 1e-9 or abs((n / nn) @ axis) < 1 - 1e-7:
                    continue
                sol = edge_edge_gap(va, vb, w, toward=axis)
                if -1e-7 <= sol.s <= 1 + 1e-7 and -1e-7 <= sol.t <= 1 + 1e-7:
                    if best is None or abs(sol.gap) < abs(best[0]):
                        best = (sol.gap, ea, eb)
        if best is None:
            raise ValueError(f"no touching feature pair found for {pair}")
        return ("edge_edge", best[1], best[2])

    def solve_contact(self, constraint: ContactConstraint, basis: LatticeBasis) -> ContactSolution:
        """Evaluate a labeled contact's parameters and signed gap for a basis."""
        A = self.hulls[(constraint.body_a, +1)]
        B = self.hulls[(constraint.body_b, constraint.coset)]
        pair = PairClass(constraint.body_a, constraint.body_b, constraint.coset, constraint.coords)
        w = pair.offset(basis)
        if constraint.kind == "edge_edge":
            (i, j), (k, l) = constraint.feature_a, constraint.feature_b
            toward = B.centroid + w - A.centroid
            n = np.cross(A.vertices[j] - A.vertices[i], B.vertices[l] - B.vertices[k])
            n /= np.linalg.norm(n)
            if n @ toward < 0:
                n = -n
            return edge_edge_gap(
                (A.vertices[i], A.vertices[j]), (B.vertices[k], B.vertices[l]), w, toward=n
            )
        fa = A.vertices[list(A.faces[constraint.feature_a])]
        fb = B.vertices[list(B.faces[constraint.feature_b])]
        return face_face_gap(fa, fb, w, normal=A.face_normals[constraint.feature_a])

    def contact_row(self, constraint: ContactConstraint) -> tuple:
        """Affine form of a contact gap: (g, h) with gap(x) = g . x - h
        for the stacked basis vector x = (a, b, c, d)."""
        A = self.hulls[(constraint.body_a, +1)]
        B = self.hulls[(constraint.body_b, constraint.coset)]
        pair = PairClass(constraint.body_a, constraint.body_b, constraint.coset, constraint.coords)
        if constraint.kind == "edge_edge":
            (i, j), (k, l) = constraint.feature_a, constraint.feature_b
            n = np.cross(A.vertices[j] - A.vertices[i], B.vertices[l] - B.vertices[k])
            n /= np.linalg.norm(n)
            p_a, p_b = A.vertices[i], B.vertices[k]
        else:
            n = A.face_normals[constraint.feature_a]
            p_a = A.vertices[A.faces[constraint.feature_a][0]]
            p_b = B.vertices[B.faces[constraint.feature_b][0]]
        return n @ pair.offset_jacobian(), float(n @ (p_a - p_b))


# ---------------------------------------------------------------------------
# labeling


def _subscript(alpha: int, beta: int) -> str:
    if (alpha, beta) < (0, 0) or (alpha == 0 and beta < 0):
        alpha, beta = -alpha, -beta
    if (alpha, beta) == (0, 0):
        return "0"
    if (alpha, beta) == (1, 0):
        return "a"
    if (alpha, beta) == (0, 1):
        return "b"
    if (alpha, beta) == (1, 1):
        return "a+b"
    if (alpha, beta) == (1, -1):
        return "a-b"
    return f"{alpha}a{beta:+d}b"


def make_label(pair: PairClass, offset_z: float) -> str:
    al, be, ga = pair.coords
    sub = _subscript(al, be)
    if pair.coset == +1 and ga == 0:
        family = "H" if pair.body_a != pair.body_b else "G"
        return f"{family}_{sub}" if family == "H" else f"G_{sub}^0"
    sup = "+" if offset_z > 0 else "-"
    return f"G_{sub}^{sup}"


def classify_active(cluster: Cluster, basis: LatticeBasis, tol: float = ACTIVE_TOL,
                    cutoff: float = None, table: PairTable = None) -> ContactSet:
    """Find every touching half-cluster pair class of a packing and label it.

    A class is active when its signed separation lies within ``tol`` of
    zero.  Duplicate labels (possible away from the family's structure)
    are disambiguated with a numeric suffix.
    """
    if cutoff is None:
        cutoff = default_cutoff(cluster)
    if table is None:
        table = PairTable(cluster)
    constraints, solutions = [], []
    seen = {}
    for pair in table.classes(basis, cutoff):
        w = pair.offset(basis)
        gap, axis, _ = table.gap(pair, w)
        if abs(gap) > tol:
            continue
        kind, feat_a, feat_b = table.identify_features(pair, basis, axis)
        label = make_label(pair, float(w[2]))
        if label in seen:
            seen[label] += 1
            label = f"{label}#{seen[label]}"
        else:
            seen[label] = 1
        constraint = ContactConstraint(kind, pair.body_a, pair.body_b, pair.coset,
                                       pair.coords, feat_a, feat_b, label)
        constraints.append(constraint)
        solutions.append(table.solve_contact(constraint, basis))
    order = sorted(range(len(constraints)), key=lambda i: constraints[i].label)
    return ContactSet([constraints[i] for i in order], [solutions[i] for i in order])
