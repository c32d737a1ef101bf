"""The 2-parameter family of 9-tetrahedron clusters.

The central regular tetrahedron has its top edge on the line z = 1,
x = y and its bottom edge on z = -1, x = -y (edge length sqrt(8),
volume 8/3).  Four more tetrahedra wrap around each of those two edges
as a rigid chain; every vertex of a chain lies on a circle of radius
sqrt(6) about the shared edge's midpoint, and consecutive chain
vertices are separated by the tetrahedral dihedral angle acos(1/3).
Five of those wedges (central plus four chain) leave an angular slack
of 2*pi - 5*acos(1/3) (about 7.36 degrees), so the chain can swivel.

The swivel parameter is the x-coordinate of the chain's apex vertex:
u = sqrt(3) * sin(theta) for the top chain (and v likewise for the
bottom), which runs over [-1/9, +1/9]; at the endpoints the chain
touches a face of the central tetrahedron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import ConvexBody

EDGE_LENGTH = math.sqrt(8.0)
TETRA_VOLUME = 8.0 / 3.0
DIHEDRAL = math.acos(1.0 / 3.0)
SWIVEL_MAX = 1.0 / 9.0
_RANGE_TOL = 1e-12

__all__ = [
    "EDGE_LENGTH",
    "TETRA_VOLUME",
    "DIHEDRAL",
    "SWIVEL_MAX",
    "SwivelParams",
    "Tetra",
    "HalfCluster",
    "Cluster",
    "IsometryGroup",
    "base_tetra",
    "apex_height",
    "build_chain",
    "build_cluster",
    "isometry_group",
    "param_orbit",
]

RIM_NAMES = ("o", "p", "q", "r", "s")

# canonical half-cluster vertex order: shared edge, central far pair, rim o..s
_E0, _E1, _W0, _W1 = 0, 1, 2, 3
_RIM0 = 4
# hull rim cycle in angular order; w0 sits just below o, w1 just above s
_CYCLE = (_W0, _RIM0, _RIM0 + 1, _RIM0 + 2, _RIM0 + 3, _RIM0 + 4, _W1)
HULL_FACES = tuple(
    f
    for i in range(7)
    for f in ((_E0, _CYCLE[i], _CYCLE[(i + 1) % 7]), (_E1, _CYCLE[(i + 1) % 7], _CYCLE[i]))
)
HULL_EDGES = tuple(
    sorted({tuple(sorted((f[i], f[(i + 1) % 3]))) for f in HULL_FACES for i in range(3)})
)


def _check_param(param: float) -> float:
    param = float(param)
    if abs(param) > SWIVEL_MAX + _RANGE_TOL:
        raise ValueError(f"swivel parameter {param} outside [-1/9, +1/9]")
    return param


@dataclass(frozen=True)
class SwivelParams:
    """Swivel pair (u, v) with the equivalent rotation angles."""

    u: float
    v: float
    theta_u: float
    theta_v: float

    def __post_init__(self):
        for p, th in ((self.u, self.theta_u), (self.v, self.theta_v)):
            _check_param(p)
            if abs(math.sqrt(3.0) * math.sin(th) - p) > _RANGE_TOL:
                raise ValueError("theta inconsistent with sqrt(3)*sin(theta) = param")

    @classmethod
    def from_uv(cls, u: float, v: float) -> "SwivelParams":
        u, v = _check_param(u), _check_param(v)
        return cls(u, v, math.asin(u / math.sqrt(3.0)), math.asin(v / math.sqrt(3.0)))


@dataclass(frozen=True)
class Tetra:
    """One regular tetrahedron as a (4, 3) vertex array."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.array([np.linalg.norm(v[j] - v[i]) for i in range(4) for j in range(i + 1, 4)])

    def volume(self) -> float:
        v = self.vertices
        return abs(np.linalg.det(np.column_stack([v[1] - v[0], v[2] - v[0], v[3] - v[0]]))) / 6.0

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass
class HalfCluster:
    """Five tetrahedra about one edge: the central one plus a chain of four."""

    side: str
    param: float
    tetrahedra: tuple
    rim: dict
    hull: ConvexBody

    @property
    def apex(self) -> np.ndarray:
        """Extreme chain vertex (q); its x-coordinate equals the swivel parameter."""
        return self.rim["q"]


@dataclass
class Cluster:
    """Full 9-tetrahedron cluster: two half-clusters sharing the central tetrahedron."""

    params: SwivelParams
    upper: HalfCluster
    lower: HalfCluster
    orientation: int

    @property
    def tetrahedra(self) -> tuple:
        """All 9 tetrahedra (central listed once)."""
        return self.upper.tetrahedra + self.lower.tetrahedra[1:]

    def all_vertices(self) -> np.ndarray:
        return np.vstack([t.vertices for t in self.tetrahedra])

    def circumradius(self) -> float:
        return float(np.linalg.norm(self.all_vertices(), axis=1).max())


def base_tetra() -> Tetra:
    """The central tetrahedron spanning the top edge (z=+1) and bottom edge (z=-1)."""
    return Tetra(
        np.array(
            [
                [+1.0, +1.0, +1.0],
                [-1.0, -1.0, +1.0],
                [+1.0, -1.0, -1.0],
                [-1.0, +1.0, -1.0],
            ]
        )
    )


def apex_height(param: float) -> float:
    """|z| of the chain apex: 1 + sqrt(6 - 2 p^2) (negated for the bottom chain)."""
    param = _check_param(param)
    return 1.0 + math.sqrt(6.0 - 2.0 * param * param)


def _half_vertices(side: str, param: float) -> np.ndarray:
    """Canonical 9 vertices [e0, e1, w0, w1, o, p, q, r, s] of one half-cluster."""
    theta = math.asin(param / math.sqrt(3.0))
    phis = theta + np.arange(-2, 3) * DIHEDRAL
    s3, s6 = math.sqrt(3.0), math.sqrt(6.0)
    if side == "upper":
        e0, e1 = (+1.0, +1.0, +1.0), (-1.0, -1.0, +1.0)
        w0, w1 = (-1.0, +1.0, -1.0), (+1.0, -1.0, -1.0)
        rim = np.stack([s3 * np.sin(phis), -s3 * np.sin(phis), 1.0 + s6 * np.cos(phis)], axis=1)
    elif side == "lower":
        e0, e1 = (+1.0, -1.0, -1.0), (-1.0, +1.0, -1.0)
        w0, w1 = (-1.0, -1.0, +1.0), (+1.0, +1.0, +1.0)
        rim = np.stack([s3 * np.sin(phis), s3 * np.sin(phis), -1.0 - s6 * np.cos(phis)], axis=1)
    else:
        raise ValueError(f"unknown side {side!r}")
    return np.vstack([np.array([e0, e1, w0, w1]), rim])


def build_chain(side: str, param: float) -> HalfCluster:
    """Build a half-cluster: the central tetrahedron plus its swiveled chain of four.

    The chain apex lands exactly at x = param (upper side: apex (u, -u, .);
    lower side: apex (v, v, .)).  At param = 0 the half-cluster is mirror
    symmetric about the plane through the shared edge.
    """
    param = _check_param(param)
    verts = _half_vertices(side, param)
    tets = [Tetra(verts[[_E0, _E1, _W0, _W1]])]
    for k in range(4):
        tets.append(Tetra(verts[[_E0, _E1, _RIM0 + k, _RIM0 + k + 1]]))
    hull = ConvexBody(verts, HULL_FACES, HULL_EDGES)
    rim = {name: verts[_RIM0 + i] for i, name in enumerate(RIM_NAMES)}
    return HalfCluster(side, param, tuple(tets), rim, hull)


def build_cluster(params: SwivelParams, orientation: int = +1) -> Cluster:
    """Assemble the full cluster; orientation -1 is the point reflection."""
    if isinstance(params, tuple):
        params = SwivelParams.from_uv(*params)
    if orientation not in (+1, -1):
        raise ValueError("orientation must be +1 or -1")
    upper = build_chain("upper", params.u)
    lower = build_chain("lower", params.v)
    if orientation == -1:
        for half in (upper, lower):
            half.tetrahedra = tuple(Tetra(-t.vertices) for t in half.tetrahedra)
            half.rim = {k: -v for k, v in half.rim.items()}
            half.hull = half.hull.negated()
    return Cluster(params, upper, lower, orientation)


_P = np.array([[0.0, -1.0, 0.0], [+1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
_Q = np.array([[+1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])

# signed swap of (u, v) induced by each element, as a 2x2 integer matrix
_ACTIONS = {
    "I": [[1, 0], [0, 1]],
    "P": [[0, -1], [1, 0]],
    "P2": [[-1, 0], [0, -1]],
    "P3": [[0, 1], [-1, 0]],
    "Q": [[0, 1], [1, 0]],
    "QP": [[1, 0], [0, -1]],
    "QP2": [[0, -1], [-1, 0]],
    "QP3": [[-1, 0], [0, 1]],
}


@dataclass(frozen=True)
class IsometryGroup:
    """The order-8 point group of the symmetric cluster, with its (u, v) action."""

    names: tuple
    elements: tuple
    param_action: dict

    def act_on_params(self, name: str, u: float, v: float):
        m = self.param_action[name]
        return (m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v)


def isometry_group() -> IsometryGroup:
    mats = {
        "I": np.eye(3),
        "P": _P,
        "P2": _P @ _P,
        "P3": _P @ _P @ _P,
        "Q": _Q,
        "QP": _Q @ _P,
        "QP2": _Q @ _P @ _P,
        "QP3": _Q @ _P @ _P @ _P,
    }
    names = tuple(_ACTIONS.keys())
    return IsometryGroup(names, tuple(mats[n] for n in names), dict(_ACTIONS))


def param_orbit(params: SwivelParams) -> list:
    """The 8 signed swaps of (u, v), in group order I, P, P2, P3, Q, QP, QP2, QP3."""
    if isinstance(params, tuple):
        u, v = params
    else:
        u, v = params.u, params.v
    group = isometry_group()
    return [group.act_on_params(n, u, v) for n in group.names]
