"""Lattice optimization: inner volume minimization and the outer swivel search.

The inner problem minimizes the fundamental-domain volume over the 12
basis numbers (a, b, c, d) subject to non-overlap of every near
half-cluster pair.  Each pair's signed separation is a maximum of
functions that are affine in the basis (see ``contacts.PairTable``), so
the solver alternates between picking each pair's witness axis and
solving the resulting linearly-constrained subproblem with SLSQP.  Any
point satisfying the linearized constraints satisfies the true ones, so
every accepted iterate is a valid packing.

The outer problem follows the same route as the numeric pipeline that
produced the published optimum: freeze the ten always-active contact
equations G found on a converged packing, ride their equation solve to
its densest swivel pair, add the (at most two) upper-lower contacts H
that overlap there, and maximize the full 12-equation density.  The
result is reported in the canonical wedge u <= 0 <= v, |u| <= |v| of
the 8-fold parameter orbit, with the basis transported by the matching
isometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .cluster import Cluster, SwivelParams, SWIVEL_MAX, build_cluster, isometry_group
from .contacts import ACTIVE_TOL, ContactConstraint, ContactSet, PairTable, classify_active, make_label
from .packing import LatticeBasis, PackingResult, default_cutoff, density, lattice_volume
from .verify import sym_basis

__all__ = [
    "OptimizerConfig",
    "DensitySample",
    "InfeasibleStartError",
    "optimize_lattice",
    "maximize_density",
    "virtual_density",
    "sweep",
    "reference_contacts",
    "initial_basis",
]

VARIANTS = ("free", "G", "Ga", "Gb", "Gab")


class InfeasibleStartError(ValueError):
    """Initial basis penetrates too deeply to restore feasibility."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the inner solver, the outer search, and the sweep."""

    variant: str = "free"
    init: str = "sym"  # 'sym' paradigm basis | 'explicit' (caller provides)
    cutoff_factor: float = 2.5
    max_rounds: int = 60
    slsqp_maxiter: int = 300
    constraint_tol: float = 1e-7
    step_tol: float = 1e-12
    active_tol: float = ACTIVE_TOL
    nudge: float = 0.45
    outer_start: tuple = (0.0, 0.0)
    outer_xatol: float = 1e-9
    outer_maxfev: int = 800
    threads: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        for name in ("constraint_tol", "step_tol", "active_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class DensitySample:
    """One optimized sample of a density surface."""

    u: float
    v: float
    variant: str
    D: float
    V: float
    converged: bool
    active_labels: list = field(default_factory=list)


def initial_basis(nudge_dir: int = None, magnitude: float = 0.45) -> LatticeBasis:
    """The symmetric paradigm basis, optionally with the layer offsets pushed
    along one of eight compass directions to break the start's symmetry."""
    basis = sym_basis()
    if nudge_dir is None:
        return basis
    t = nudge_dir * math.pi / 4.0
    e = magnitude * np.array([math.cos(t), math.sin(t), 0.0])
    return LatticeBasis(basis.a, basis.b, basis.c + e, basis.d - e)


def _volume(x: np.ndarray) -> float:
    return float(np.linalg.det(np.column_stack([2 * x[0:3], 2 * x[3:6], x[6:9] - x[9:12]])))


def _volume_grad(x: np.ndarray) -> np.ndarray:
    M = np.column_stack([2 * x[0:3], 2 * x[3:6], x[6:9] - x[9:12]])
    C = np.linalg.det(M) * np.linalg.inv(M).T  # cofactor matrix
    g = np.empty(12)
    g[0:3] = 2 * C[:, 0]
    g[3:6] = 2 * C[:, 1]
    g[6:9] = C[:, 2]
    g[9:12] = -C[:, 2]
    return g


def _min_gap(table: PairTable, x: np.ndarray, cutoff: float) -> float:
    return table.min_gap(LatticeBasis.from_vector(x), cutoff)


def _restore_feasibility(table: PairTable, x: np.ndarray, cutoff: float,
                         tol: float = 1e-9) -> np.ndarray:
    """Inflate the basis until no pair penetrates; offsets scale with x."""
    for _ in range(500):
        if _min_gap(table, x, cutoff) >= -tol:
            return x
        x = 1.03 * x
    raise InfeasibleStartError("could not inflate the initial basis to feasibility")


def optimize_lattice(cluster: Cluster, init: LatticeBasis, config: OptimizerConfig = None,
                     forced: list = None, table: PairTable = None) -> PackingResult:
    """Minimize det[2a, 2b, c-d] subject to non-overlap of all near pairs.

    ``forced`` constraints (from a frozen contact set) are held at exactly
    zero gap while every other pair stays non-negative.  The initial basis
    must be feasible or mildly penetrating (it is inflated to feasibility
    first); a deeply overlapping start raises InfeasibleStartError.
    Non-convergence is reported on the result, not raised.
    """
    config = config or OptimizerConfig()
    table = table or PairTable(cluster)
    cutoff = default_cutoff(cluster, config.cutoff_factor)
    x = init.as_vector().copy()
    start_gap = _min_gap(table, x, cutoff)
    if start_gap < -0.5:
        raise InfeasibleStartError(f"initial basis penetrates by {-start_gap:.3f}")
    x = _restore_feasibility(table, x, cutoff)

    eq_rows, eq_rhs = [], []
    for constraint in forced or []:
        row, rhs = table.contact_row(constraint)
        eq_rows.append(row)
        eq_rhs.append(rhs)

    prev_v = _volume(x)
    rounds = 0
    message = "converged"
    for rounds in range(1, config.max_rounds + 1):
        basis = LatticeBasis.from_vector(x)
        rows, consts = [], []
        for pair in table.classes(basis, cutoff):
            _, axis, const = table.gap(pair, pair.offset(basis))
            rows.append(axis @ pair.offset_jacobian())
            consts.append(const)
        A_in, b_in = np.array(rows), np.array(consts)
        constraints = [{
            "type": "ineq",
            "fun": lambda y, A=A_in, b=b_in: A @ y + b,
            "jac": lambda y, A=A_in: A,
        }]
        if eq_rows:
            A_eq, b_eq = np.array(eq_rows), np.array(eq_rhs)
            constraints.append({
                "type": "eq",
                "fun": lambda y, A=A_eq, b=b_eq: A @ y - b,
                "jac": lambda y, A=A_eq: A,
            })
        res = minimize(_volume, x, jac=_volume_grad, method="SLSQP",
                       constraints=constraints,
                       options={"maxiter": config.slsqp_maxiter, "ftol": 1e-14})
        if _min_gap(table, res.x, cutoff) < -config.constraint_tol:
            message = "step rejected: linearization left the feasible set"
            break
        x = res.x
        new_v = _volume(x)
        if abs(prev_v - new_v) < config.step_tol * max(1.0, abs(prev_v)):
            break
        prev_v = new_v
    else:
        message = "round limit reached"

    min_gap = _min_gap(table, x, cutoff)
    V = _volume(x)
    converged = message == "converged" and min_gap >= -config.constraint_tol
    return PackingResult(cluster.params, LatticeBasis.from_vector(x), V, density(V),
                         converged=converged, iterations=rounds,
                         min_gap=min_gap, message=message)


def _multistart(cluster: Cluster, config: OptimizerConfig, table: PairTable = None) -> PackingResult:
    """Free solves from the paradigm basis and its eight nudged variants."""
    table = table or PairTable(cluster)
    best = None
    for nd in [None] + list(range(8)):
        result = optimize_lattice(cluster, initial_basis(nd, config.nudge), config, table=table)
        if not result.converged:
            continue
        if best is None or result.V < best.V - 1e-12:
            best = result
    if best is None:
        raise InfeasibleStartError("no multistart solve converged")
    return best


# ---------------------------------------------------------------------------
# equation solves (the variant pipeline)


def _solve_equations(cluster: Cluster, eqs: list, table: PairTable = None,
                     warm: np.ndarray = None) -> np.ndarray:
    """Solve the frozen contact equations for the basis.

    Twelve equations pin the twelve basis numbers exactly (one linear
    solve); with fewer, the volume is minimized over the affine solution
    space by quasi-Newton steps in the nullspace.
    """
    table = table or PairTable(cluster)
    rows = np.empty((len(eqs), 12))
    rhs = np.empty(len(eqs))
    for i, constraint in enumerate(eqs):
        rows[i], rhs[i] = table.contact_row(constraint)
    if len(eqs) == 12:
        return np.linalg.solve(rows, rhs)
    x_p, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    N = scipy.linalg.null_space(rows)
    y0 = N.T @ (warm - x_p) if warm is not None else np.zeros(N.shape[1])
    res = minimize(lambda y: _volume(x_p + N @ y), y0,
                   jac=lambda y: N.T @ _volume_grad(x_p + N @ y),
                   method="BFGS", options={"gtol": 1e-12})
    return x_p + N @ res.x


def _variant_equations(reference: ContactSet, variant: str) -> list:
    g = reference.family("G")
    h = sorted(reference.family("H"), key=lambda c: c.label)
    if variant == "G":
        return g
    if variant == "Ga":
        return g + [c for c in h if c.label == "H_a"]
    if variant == "Gb":
        return g + [c for c in h if c.label == "H_b"]
    if variant == "Gab":
        return g + h
    raise ValueError(f"not an equation variant: {variant!r}")


def _clamped(uv) -> bool:
    return abs(uv[0]) <= SWIVEL_MAX + 1e-15 and abs(uv[1]) <= SWIVEL_MAX + 1e-15


def _equation_surface(eqs: list):
    """V(u, v) for a frozen equation set, with simple out-of-range guarding."""
    warm = {"x": None}

    def f(uv):
        if not _clamped(uv):
            return 1e9
        cluster = build_cluster(SwivelParams.from_uv(*uv))
        table = PairTable(cluster)
        try:
            x = _solve_equations(cluster, eqs, table, warm=warm["x"])
        except np.linalg.LinAlgError:
            return 1e9
        warm["x"] = x
        return _volume(x)

    return f


def _nm(f, start, xatol, maxfev):
    h = 0.02
    simplex = np.array([start, [start[0] + h, start[1]], [start[0], start[1] + h]])
    simplex = np.clip(simplex, -SWIVEL_MAX, SWIVEL_MAX)
    return minimize(f, np.asarray(start, dtype=float), method="Nelder-Mead",
                    options={"xatol": xatol, "fatol": 1e-14,
                             "initial_simplex": simplex, "maxfev": maxfev})


# ---------------------------------------------------------------------------
# reference freezing and the outer maximization

_REFERENCE: dict = {}


def _transport_basis(basis: LatticeBasis, R: np.ndarray) -> LatticeBasis:
    """Apply an isometry of the packing to its basis description.

    The group elements preserve the layer plane; when they flip z the
    above/below offsets trade places, and an orientation-reversing image
    swaps a and b to keep the generator determinant positive.
    """
    a, b = R @ basis.a, R @ basis.b
    c, d = R @ basis.c, R @ basis.d
    if c[2] < 0:
        c, d = d, c
    if np.linalg.det(np.column_stack([2 * a, 2 * b, c - d])) < 0:
        a, b = b, a
    return LatticeBasis(a, b, c, d)


def _canonicalize(u: float, v: float, basis: LatticeBasis):
    """Move (u, v) into the wedge u <= 0 <= v, |u| <= |v| along its orbit."""
    group = isometry_group()
    for name, R in zip(group.names, group.elements):
        un, vn = group.act_on_params(name, u, v)
        if un <= 1e-15 and vn >= -1e-15 and abs(un) <= abs(vn) + 1e-15:
            return un, vn, _transport_basis(basis, R), name
    return u, v, basis, "I"


def _reduce_inlayer_gauge(basis: LatticeBasis) -> LatticeBasis:
    """Pick the in-layer generator labeling with a nearest the +x axis.

    (a, b) -> (b, -a) etc. generate the same lattice with the same
    orientation; reporting the representative closest to the coordinate
    axes keeps result documents comparable between runs.
    """
    best = None
    a, b = basis.a, basis.b
    for cand_a, cand_b in ((a, b), (b, -a), (-a, -b), (-b, a)):
        key = (cand_a[0], cand_a[1])
        if best is None or key > best[0]:
            best = (key, cand_a, cand_b)
    return LatticeBasis(best[1], best[2], basis.c, basis.d)


def _reduce_layer_offsets(basis: LatticeBasis, table: PairTable, cutoff: float,
                          tol: float) -> LatticeBasis:
    """Re-pick the coset representatives c and d along the in-layer lattice.

    Shifting c or d by a vector of Z*2a + Z*2b relabels the same packing.
    When an adjacent layer touches at three places, the representative is
    chosen to be one of the contact offsets with the other two exactly
    2a and 2b steps away, which makes those contacts read 0, a, b.
    """
    def touching(layer_sign):
        out = []
        for pair in table.classes(basis, cutoff):
            if pair.coset != -1:
                continue
            w = pair.offset(basis)
            if layer_sign * w[2] > 0 and abs(table.gap(pair, w)[0]) <= tol:
                out.append(w)
        return out

    steps = (2.0 * basis.a, 2.0 * basis.b)
    new = {"c": basis.c, "d": basis.d}
    for name, sign in (("c", +1), ("d", -1)):
        offsets = touching(sign)
        for w_star in offsets:
            rel = [w - w_star for w in offsets]
            if all(any(np.linalg.norm(r - e) < 1e-6 or np.linalg.norm(r + e) < 1e-6
                       for e in steps) or np.linalg.norm(r) < 1e-6 for r in rel):
                new[name] = w_star
                break
    return LatticeBasis(basis.a, basis.b, new["c"], new["d"])


def _discover_reference(config: OptimizerConfig):
    """Freeze the labeled contact equations G and H from converged packings.

    G is read off the free optimum of the start cluster; H are the pair
    classes that overlap when the G-only equation solve is pushed to its
    densest swivel pair (the contacts that must be imposed to keep that
    region overlap-free).
    """
    start = config.outer_start
    cluster0 = build_cluster(SwivelParams.from_uv(*start))
    table0 = PairTable(cluster0)
    seed = _multistart(cluster0, config, table0)
    census = classify_active(cluster0, seed.basis, config.active_tol, table=table0)
    eqs0 = list(census.constraints)

    res_a = _nm(_equation_surface(eqs0), start, config.outer_xatol, config.outer_maxfev)
    u_a, v_a = res_a.x
    cluster_a = build_cluster(SwivelParams.from_uv(u_a, v_a))
    table_a = PairTable(cluster_a)
    x_a = _solve_equations(cluster_a, eqs0, table_a)
    basis_a = LatticeBasis.from_vector(x_a)
    extra = []
    for pair in table_a.classes(basis_a, default_cutoff(cluster_a, config.cutoff_factor)):
        gap, axis, _ = table_a.gap(pair, pair.offset(basis_a))
        if gap < -config.active_tol:
            kind, fa, fb = table_a.identify_features(pair, basis_a, axis)
            label = make_label(pair, float(pair.offset(basis_a)[2]))
            extra.append(ContactConstraint(kind, pair.body_a, pair.body_b,
                                           pair.coset, pair.coords, fa, fb, label))
    return eqs0, extra, (u_a, v_a)


def maximize_density(config: OptimizerConfig = None):
    """Find the relative density maximum of the family from the default start.

    Returns (u, v, PackingResult) at the canonical representative of the
    optimum's parameter orbit; the result carries the full active contact
    census, which is also cached as the frozen reference for the variant
    solves.
    """
    config = config or OptimizerConfig()
    eqs_g, eqs_h, uv_a = _discover_reference(config)
    eqs_all = eqs_g + eqs_h

    res_b = _nm(_equation_surface(eqs_all), uv_a, config.outer_xatol, config.outer_maxfev)
    u_b, v_b = float(res_b.x[0]), float(res_b.x[1])

    cluster_b = build_cluster(SwivelParams.from_uv(u_b, v_b))
    table_b = PairTable(cluster_b)
    x_b = _solve_equations(cluster_b, eqs_all, table_b)

    u_c, v_c, basis_c, _ = _canonicalize(u_b, v_b, LatticeBasis.from_vector(x_b))
    params = SwivelParams.from_uv(u_c, v_c)
    cluster = build_cluster(params)
    table = PairTable(cluster)
    cutoff = default_cutoff(cluster, config.cutoff_factor)
    basis_c = _reduce_inlayer_gauge(basis_c)
    basis_c = _reduce_layer_offsets(basis_c, table, cutoff, config.active_tol)
    result = optimize_lattice(cluster, basis_c, config, table=table)
    result.active_contacts = classify_active(cluster, result.basis, config.active_tol, table=table)
    _REFERENCE["contacts"] = result.active_contacts
    _REFERENCE["params"] = params
    _REFERENCE["basis"] = result.basis
    return u_c, v_c, result


def reference_contacts(config: OptimizerConfig = None) -> ContactSet:
    """The frozen labeled contact set (computed once, then cached)."""
    if "contacts" not in _REFERENCE:
        maximize_density(config)
    return _REFERENCE["contacts"]


def virtual_density(params: SwivelParams, variant: str, config: OptimizerConfig = None,
                    reference: ContactSet = None) -> DensitySample:
    """Density of one forced-equation variant at the given swivel pair.

    The variant's contacts are held at zero gap; nothing else is
    constrained, so outside its valid region the solved packing may
    overlap, which is reported through ``converged = False``.
    """
    config = config or OptimizerConfig()
    if isinstance(params, tuple):
        params = SwivelParams.from_uv(*params)
    if reference is None:
        reference = reference_contacts(config)
    eqs = _variant_equations(reference, variant)
    cluster = build_cluster(params)
    table = PairTable(cluster)
    x = _solve_equations(cluster, eqs, table)
    V = _volume(x)
    basis = LatticeBasis.from_vector(x)
    overlap_free = table.min_gap(basis, default_cutoff(cluster, config.cutoff_factor)) >= -config.constraint_tol
    return DensitySample(params.u, params.v, variant, density(V), V, overlap_free,
                         [c.label for c in eqs])


def _free_sample(cluster: Cluster, config: OptimizerConfig, warm_basis: LatticeBasis,
                 table: PairTable) -> tuple:
    try:
        result = optimize_lattice(cluster, warm_basis, config, table=table)
    except InfeasibleStartError:
        result = optimize_lattice(cluster, initial_basis(), config, table=table)
    labels = []
    cutoff = default_cutoff(cluster, config.cutoff_factor)
    for pair in table.classes(result.basis, cutoff):
        w = pair.offset(result.basis)
        gap, _, _ = table.gap(pair, w)
        if abs(gap) <= config.active_tol:
            labels.append(make_label(pair, float(w[2])))
    return result, sorted(labels)


def _sweep_rows(args):
    """Serpentine sweep over a block of grid rows (one warm chain per block)."""
    rows, grid, variant, config, reference, warm_vec = args
    out = []
    warm_basis = LatticeBasis.from_vector(warm_vec)
    for pass_idx, i in enumerate(rows):
        cols = range(len(grid)) if pass_idx % 2 == 0 else range(len(grid) - 1, -1, -1)
        for j in cols:
            u, v = float(grid[i]), float(grid[j])
            params = SwivelParams.from_uv(u, v)
            cluster = build_cluster(params)
            table = PairTable(cluster)
            try:
                if variant == "free":
                    result, labels = _free_sample(cluster, config, warm_basis, table)
                    warm_basis = result.basis
                    sample = DensitySample(u, v, variant, result.D, result.V,
                                           result.converged, labels)
                else:
                    sample = virtual_density(params, variant, config, reference)
            except Exception as exc:  # record the failure, keep sweeping
                sample = DensitySample(u, v, variant, math.nan, math.nan, False,
                                       [f"error:{type(exc).__name__}"])
            out.append(((i, j), sample))
    return out


def sweep(grid_n: int, variant: str = "free", config: OptimizerConfig = None,
          threads: int = None) -> list:
    """Solve a grid_n x grid_n grid over the closed swivel square.

    Rows are walked serpentine so consecutive solves warm-start each
    other; with several workers the rows are split into contiguous
    blocks, one warm chain per worker, merged back in grid order.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    config = config or OptimizerConfig()
    threads = threads if threads is not None else config.threads
    grid = np.linspace(-SWIVEL_MAX, SWIVEL_MAX, grid_n)
    reference = reference_contacts(config) if variant != "free" else None
    warm = _REFERENCE.get("basis", initial_basis())
    row_ids = list(range(grid_n))
    if threads > 1:
        blocks = [row_ids[k::threads] for k in range(threads)]
        blocks = [sorted(b) for b in blocks if b]
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
            chunks = pool.map(_sweep_rows, [(b, grid, variant, config, reference,
                                             warm.as_vector()) for b in blocks])
            results = [s for chunk in chunks for s in chunk]
    else:
        results = _sweep_rows((row_ids, grid, variant, config, reference, warm.as_vector()))
    results.sort(key=lambda t: t[0])
    return [s for _, s in results]
