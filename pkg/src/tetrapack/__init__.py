"""Dense crystallographic packings of regular tetrahedra.

Builds the two-parameter family of 9-tetrahedron swivel clusters, packs
them in layered two-coset lattices, optimizes the lattice volume under
non-overlap constraints, and certifies the result with separating
planes.
"""

__version__ = "0.1.0"

from .cluster import (
    Cluster,
    HalfCluster,
    SwivelParams,
    Tetra,
    apex_height,
    base_tetra,
    build_chain,
    build_cluster,
    isometry_group,
    param_orbit,
)
from .contacts import ContactConstraint, ContactSet, ContactSolution, classify_active, edge_edge_gap, face_face_gap
from .geom import ConvexBody, Plane, Separation, body_volume, convex_hull, ring_solid_angle, rotate_about_line, signed_separation
from .optimizer import DensitySample, OptimizerConfig, maximize_density, optimize_lattice, sweep, virtual_density
from .packing import LatticeBasis, PackingResult, density, enumerate_neighbors, instantiate, lattice_volume
from .verify import Certificate, SymPacking, build_sym_packing, certify, reference_constants

__all__ = [
    "__version__",
    "SwivelParams", "Tetra", "HalfCluster", "Cluster",
    "base_tetra", "apex_height", "build_chain", "build_cluster",
    "isometry_group", "param_orbit",
    "ConvexBody", "Plane", "Separation",
    "rotate_about_line", "convex_hull", "body_volume", "signed_separation", "ring_solid_angle",
    "LatticeBasis", "PackingResult", "lattice_volume", "density",
    "enumerate_neighbors", "instantiate",
    "ContactConstraint", "ContactSolution", "ContactSet",
    "edge_edge_gap", "face_face_gap", "classify_active",
    "OptimizerConfig", "DensitySample",
    "optimize_lattice", "maximize_density", "virtual_density", "sweep",
    "Certificate", "SymPacking", "certify", "build_sym_packing", "reference_constants",
]
