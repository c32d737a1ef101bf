"""Independent certification and reference data.

Certificates are separating planes checked with nothing but dot
products, so a packing claimed by the optimizer can be audited by much
simpler code.  This module also holds the closed-form symmetric packing
of the centered cluster (an exact square-lattice packing that serves as
the optimizer's starting paradigm) and the classical reference densities
quoted alongside the main result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geom
from .cluster import Cluster, SwivelParams, build_cluster
from .contacts import classify_active
from .packing import LatticeBasis, PackingResult, default_cutoff, density, enumerate_neighbors, lattice_volume

CERT_FORMAT = "tetrapack-cert v1"
FAIL_TOL = 1e-7

__all__ = [
    "CERT_FORMAT",
    "FAIL_TOL",
    "Certificate",
    "CertificateReport",
    "SymPacking",
    "certify",
    "build_sym_packing",
    "sym_basis",
    "reference_constants",
    "write_certificates",
    "read_certificates",
]


@dataclass
class Certificate:
    """A separating plane for one half-cluster pair, with per-body margins.

    ``margin_a`` is the least signed distance of body A's vertices to the
    plane (A on the non-negative side), ``margin_b`` the greatest signed
    distance of body B's (B on the non-positive side).
    """

    coset: int
    coords: tuple
    side_a: str
    side_b: str
    plane: geom.Plane
    margin_a: float
    margin_b: float

    def ok(self, tol: float = FAIL_TOL) -> bool:
        return self.margin_a >= -tol and self.margin_b <= tol

    def recheck(self, verts_a: np.ndarray, verts_b: np.ndarray, tol: float = FAIL_TOL) -> bool:
        """Re-derive both margins from raw vertex arrays and dot products only."""
        da = verts_a @ self.plane.normal - self.plane.offset
        db = verts_b @ self.plane.normal - self.plane.offset
        return bool(da.min() >= self.margin_a - 1e-12 and db.max() <= self.margin_b + 1e-12
                    and da.min() >= -tol and db.max() <= tol)


@dataclass
class CertificateReport:
    certificates: list
    failures: list
    cutoff: float
    tol: float

    @property
    def all_ok(self) -> bool:
        return not self.failures


def certify(cluster: Cluster, basis: LatticeBasis, cutoff: float = None,
            tol: float = FAIL_TOL) -> CertificateReport:
    """One separating-plane certificate per near-neighbor half-cluster pair.

    Separation is recomputed from scratch on explicitly placed hulls
    (no optimizer state); any pair penetrating beyond ``tol`` is listed
    as a failure rather than raising.
    """
    if cutoff is None:
        cutoff = default_cutoff(cluster)
    hulls = {
        ("upper", +1): cluster.upper.hull,
        ("lower", +1): cluster.lower.hull,
        ("upper", -1): cluster.upper.hull.negated(),
        ("lower", -1): cluster.lower.hull.negated(),
    }
    certificates, failures = [], []
    for nb in enumerate_neighbors(basis, cutoff):
        if nb.coset == +1:
            pairs = [("upper", "lower")]
            if nb.coords > tuple(-x for x in nb.coords):
                pairs += [("upper", "upper"), ("lower", "lower")]
        else:
            pairs = [("upper", "upper"), ("upper", "lower"), ("lower", "lower")]
        for side_a, side_b in pairs:
            body_a = hulls[(side_a, +1)]
            body_b = hulls[(side_b, nb.coset)].translated(nb.offset)
            sep = geom.signed_separation(body_a, body_b)
            # certificate convention: A on the positive side of the plane
            plane = geom.Plane(-sep.witness.normal, -sep.witness.offset)
            margin_a = float((body_a.vertices @ plane.normal - plane.offset).min())
            margin_b = float((body_b.vertices @ plane.normal - plane.offset).max())
            cert = Certificate(nb.coset, nb.coords, side_a, side_b, plane, margin_a, margin_b)
            certificates.append(cert)
            if sep.gap < -tol:
                failures.append(cert)
    return CertificateReport(certificates, failures, cutoff, tol)


@dataclass(frozen=True)
class SymPacking:
    """Closed-form square-basis packing of the centered cluster.

    i, j, k are quadratic irrationals in sqrt(6); the lattice generators
    are 2a = (2i, 2j, 0), 2b = (-2j, 2i, 0), and the negative layers sit
    at c = (i, j, k) above and d = (-j, i, -k) below.
    """

    i: float
    j: float
    k: float
    basis: LatticeBasis

    # exact values as documentation and test anchors
    I_EXACT = "(-168 + 106*sqrt(6)) / 71"
    J_EXACT = "(-88 + 42*sqrt(6)) / 71"
    K_EXACT = "(-262 + 238*sqrt(6)) / 71"
    V_EXACT = "(-730200320 + 307139840*sqrt(6)) / 357911"
    D_EXACT = "(1711407 + 719859*sqrt(6)) / 4477040"


def sym_basis() -> LatticeBasis:
    s6 = math.sqrt(6.0)
    i = (-168.0 + 106.0 * s6) / 71.0
    j = (-88.0 + 42.0 * s6) / 71.0
    k = (-262.0 + 238.0 * s6) / 71.0
    return LatticeBasis([i, j, 0.0], [-j, i, 0.0], [i, j, k], [-j, i, -k])


def build_sym_packing() -> tuple:
    """The exact symmetric packing with its volume and density."""
    basis = sym_basis()
    i, j = basis.a[0], basis.a[1]
    k = basis.c[2]
    V = lattice_volume(basis)
    params = SwivelParams.from_uv(0.0, 0.0)
    cluster = build_cluster(params)
    contacts = classify_active(cluster, basis)
    result = PackingResult(params, basis, V, density(V), active_contacts=contacts,
                           converged=True, message="closed form")
    return SymPacking(i, j, k, basis), result


def reference_constants() -> dict:
    """Named densities quoted for comparison, all dimensionless."""
    s6 = math.sqrt(6.0)
    e5_angle, e5_local = geom.ring_solid_angle("edge", 5)
    v20_angle, v20_local = geom.ring_solid_angle("vertex", 20)
    return {
        "groemer": 18.0 / 49.0,
        "tetrahelix": math.sqrt(50000.0 / 177417.0),
        "hull_V20_lattice": 0.716796401602,
        "conway_torquato_icosahedral": 0.7165598,
        "conway_torquato_wiggled": 0.717455,
        "sphere_hcp": math.pi / math.sqrt(18.0),
        "e5_solid_angle": e5_angle,
        "e5_local": e5_local,
        "v20_solid_angle": v20_angle,
        "v20_local": v20_local,
        "sym_density": (1711407.0 + 719859.0 * s6) / 4477040.0,
        "optimum": 0.778615700855,
    }


# ---------------------------------------------------------------------------
# certificate file format (tetrapack-cert v1)


def _f(x: float) -> str:
    return f"{x:.12g}"


def write_certificates(path, report: CertificateReport, cluster: Cluster,
                       basis: LatticeBasis, V: float, D: float) -> None:
    lines = [CERT_FORMAT]
    lines.append(f"u: {_f(cluster.params.u)}")
    lines.append(f"v: {_f(cluster.params.v)}")
    for name in "abcd":
        vec = getattr(basis, name)
        lines.append(f"{name}: {_f(vec[0])} {_f(vec[1])} {_f(vec[2])}")
    lines.append(f"cutoff: {_f(report.cutoff)}")
    lines.append(f"tol: {_f(report.tol)}")
    lines.append(f"V: {_f(V)}")
    lines.append(f"D: {_f(D)}")
    lines.append(f"pairs: {len(report.certificates)}")
    lines.append(f"failures: {len(report.failures)}")
    for c in report.certificates:
        coset = "+" if c.coset == +1 else "-"
        status = "ok" if c.ok(report.tol) else "FAIL"
        al, be, ga = c.coords
        lines.append(
            f"pair: {coset} {al} {be} {ga} {c.side_a} {c.side_b} "
            f"{_f(c.plane.normal[0])} {_f(c.plane.normal[1])} {_f(c.plane.normal[2])} "
            f"{_f(c.plane.offset)} {_f(c.margin_a)} {_f(c.margin_b)} {status}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_certificates(path) -> dict:
    """Parse a certificate file back into header fields and Certificate rows."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != CERT_FORMAT:
        raise ValueError(f"not a {CERT_FORMAT} file")
    head = {}
    certs = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, rest = ln.partition(":")
        rest = rest.strip()
        if key == "pair":
            parts = rest.split()
            coset = +1 if parts[0] == "+" else -1
            coords = tuple(int(t) for t in parts[1:4])
            side_a, side_b = parts[4], parts[5]
            normal = np.array([float(t) for t in parts[6:9]])
            plane = geom.Plane(normal / np.linalg.norm(normal), float(parts[9]))
            certs.append(Certificate(coset, coords, side_a, side_b, plane,
                                     float(parts[10]), float(parts[11])))
        else:
            head[key] = rest
    return {"header": head, "certificates": certs}
