"""Layered two-coset lattice packings of clusters.

A packing is determined by four vectors a, b, c, d: positive clusters
sit on the lattice L3 = Z*2a + Z*2b + Z*(c-d); point-reflected clusters
sit on the coset c + L3 (equivalently d + L3: c sends the cluster to
the layer above, d to the layer below).  The fundamental domain holds
2 clusters = 18 tetrahedra, so the packing density is D = 48 / V with
V = det[2a, 2b, c-d].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster import Cluster
from .geom import ConvexBody

DENSITY_NUMERATOR = 48.0  # 18 tetrahedra x volume 8/3
_DET_TOL = 1e-12

__all__ = [
    "DENSITY_NUMERATOR",
    "DegenerateBasisError",
    "LatticeBasis",
    "Neighbor",
    "PlacedHalfCluster",
    "PackingResult",
    "lattice_volume",
    "density",
    "enumerate_neighbors",
    "instantiate",
    "default_cutoff",
]


class DegenerateBasisError(ValueError):
    """Raised when the three lattice generators are (nearly) dependent."""


@dataclass
class LatticeBasis:
    """Half-vectors a, b plus the above/below layer offsets c, d."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    @property
    def matrix(self) -> np.ndarray:
        """Generator matrix with columns 2a, 2b, c-d."""
        return np.column_stack([2.0 * self.a, 2.0 * self.b, self.c - self.d])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.c, self.d])

    @classmethod
    def from_vector(cls, x) -> "LatticeBasis":
        x = np.asarray(x, dtype=float).reshape(12)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    def offset(self, coset: int, coords) -> np.ndarray:
        """Translation for lattice coords (alpha, beta, gamma) in the given coset."""
        al, be, ga = coords
        w = 2.0 * al * self.a + 2.0 * be * self.b + ga * (self.c - self.d)
        if coset == -1:
            w = w + self.c
        return w


@dataclass(frozen=True)
class Neighbor:
    """One neighboring cluster image: coset (+1 positive, -1 negative) and coords."""

    coset: int
    coords: tuple
    offset: np.ndarray


@dataclass
class PlacedHalfCluster:
    source: str  # 'upper' | 'lower'
    orientation: int
    translation: np.ndarray
    hull: ConvexBody


@dataclass
class PackingResult:
    """Converged (or best-effort) packing of one cluster family member."""

    params: object
    basis: LatticeBasis
    V: float
    D: float
    active_contacts: object = None
    converged: bool = True
    iterations: int = 0
    min_gap: float = 0.0
    message: str = ""


def lattice_volume(basis: LatticeBasis) -> float:
    """Fundamental-domain volume det[2a, 2b, c-d]."""
    v = float(np.linalg.det(basis.matrix))
    if v <= _DET_TOL:
        raise DegenerateBasisError(f"basis determinant {v} is not positive")
    return v


def density(V: float) -> float:
    """Packing density 48 / V of a fundamental domain of volume V."""
    if V <= 0:
        raise ValueError("volume must be positive")
    return DENSITY_NUMERATOR / V


def default_cutoff(cluster: Cluster, factor: float = 2.5) -> float:
    """Neighbor cutoff: a multiple of the cluster circumradius (2.5 by default,
    comfortably above the 2x at which two cluster images can still touch)."""
    return factor * cluster.circumradius()


def enumerate_neighbors(basis: LatticeBasis, cutoff: float) -> list:
    """All cluster images with translation length <= cutoff, both cosets.

    Positive-coset images exclude the origin; negative images are the
    coset c + L3 (= d + L3).  Results are sorted by (coset, coords) so
    enumeration order is deterministic.
    """
    if cutoff <= 0:
        return []
    M = basis.matrix
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasisError("singular basis") from exc
    out = []
    for coset, shift in ((+1, np.zeros(3)), (-1, basis.c)):
        reach = cutoff + np.linalg.norm(shift)
        bound = np.abs(Minv).sum(axis=1) * reach + 1.0
        r0, r1, r2 = (int(np.ceil(t)) for t in bound)
        for al in range(-r0, r0 + 1):
            for be in range(-r1, r1 + 1):
                for ga in range(-r2, r2 + 1):
                    if coset == +1 and al == be == ga == 0:
                        continue
                    w = basis.offset(coset, (al, be, ga))
                    if w @ w <= cutoff * cutoff:
                        out.append(Neighbor(coset, (al, be, ga), w))
    out.sort(key=lambda n: (-n.coset, n.coords))
    return out


def instantiate(cluster: Cluster, basis: LatticeBasis, cutoff: float) -> list:
    """Place the origin cluster plus every neighbor image as transformed half-hulls."""
    placed = [
        PlacedHalfCluster("upper", cluster.orientation, np.zeros(3), cluster.upper.hull),
        PlacedHalfCluster("lower", cluster.orientation, np.zeros(3), cluster.lower.hull),
    ]
    hulls = {+1: (cluster.upper.hull, cluster.lower.hull)}
    hulls[-1] = (hulls[+1][0].negated(), hulls[+1][1].negated())
    for nb in enumerate_neighbors(basis, cutoff):
        orient = cluster.orientation * nb.coset
        up, lo = hulls[nb.coset]
        placed.append(PlacedHalfCluster("upper", orient, nb.offset, up.translated(nb.offset)))
        placed.append(PlacedHalfCluster("lower", orient, nb.offset, lo.translated(nb.offset)))
    return placed
