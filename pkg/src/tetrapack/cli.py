"""Command-line interface: optimize, sweep, verify, export, reference.

Exit codes: 0 success, 1 verification failure, 2 argument errors (from
argparse), 3 infeasible input, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import files, optimizer, verify
from .cluster import SWIVEL_MAX, SwivelParams, build_cluster
from .optimizer import InfeasibleStartError, OptimizerConfig
from .packing import default_cutoff, density, lattice_volume

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None, help="feasibility/failure tolerance")
    p.add_argument("--cutoff", type=float, default=None, help="neighbor cutoff (model units)")
    p.add_argument("--max-iter", type=int, default=None, help="inner solver round limit")
    p.add_argument("--out", type=str, default=None, help="output file path")
    p.add_argument("--threads", type=int, default=1, help="worker count (sweep only)")
    p.add_argument("--manifest", type=str, default=None, help="also write a run manifest (JSON)")


def _config(args, variant: str = "free") -> OptimizerConfig:
    kw = {"variant": variant if variant in optimizer.VARIANTS else "free",
          "threads": args.threads}
    if args.tol is not None:
        kw["constraint_tol"] = args.tol
    if args.max_iter is not None:
        kw["max_rounds"] = args.max_iter
    return OptimizerConfig(**kw)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetrapack",
                                     description="Dense crystallographic packings of regular tetrahedra")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="optimize the lattice (fixed or free swivel pair)")
    p_opt.add_argument("--u", type=float, default=None)
    p_opt.add_argument("--v", type=float, default=None)
    p_opt.add_argument("--variant", choices=optimizer.VARIANTS, default="free")
    _add_common(p_opt)

    p_sweep = sub.add_parser("sweep", help="density surface over the swivel square")
    p_sweep.add_argument("--grid", type=int, required=True)
    p_sweep.add_argument("--variant", choices=optimizer.VARIANTS, default="free")
    _add_common(p_sweep)

    p_ver = sub.add_parser("verify", help="certify a packing with separating planes")
    p_ver.add_argument("--in", dest="input", type=str, default=None,
                       help="result document to verify")
    p_ver.add_argument("--sym", action="store_true", help="verify the exact symmetric packing")
    _add_common(p_ver)

    p_exp = sub.add_parser("export", help="export placed tetrahedra as a mesh")
    p_exp.add_argument("--in", dest="input", type=str, required=True)
    p_exp.add_argument("--format", choices=["obj"], default="obj")
    p_exp.add_argument("--shells", type=int, default=0,
                       help="neighbor shells to include (0: just the cluster)")
    _add_common(p_exp)

    p_ref = sub.add_parser("reference", help="print reference densities and closed forms")
    _add_common(p_ref)
    return parser


def cmd_optimize(args) -> int:
    config = _config(args, args.variant)
    if (args.u is None) != (args.v is None):
        print("error: provide both --u and --v, or neither", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.u is None:
            u, v, result = optimizer.maximize_density(config)
        else:
            params = SwivelParams.from_uv(args.u, args.v)
            cluster = build_cluster(params)
            if args.variant == "free":
                result = optimizer.optimize_lattice(cluster, optimizer.initial_basis(), config)
                best = result
                for nd in range(8):
                    trial = optimizer.optimize_lattice(
                        cluster, optimizer.initial_basis(nd, config.nudge), config)
                    if trial.converged and trial.V < best.V - 1e-12:
                        best = trial
                result = best
            else:
                sample = optimizer.virtual_density(params, args.variant, config)
                from .packing import LatticeBasis, PackingResult
                eqs = optimizer._variant_equations(optimizer.reference_contacts(config), args.variant)
                x = optimizer._solve_equations(build_cluster(params), eqs)
                result = PackingResult(params, LatticeBasis.from_vector(x), sample.V,
                                       sample.D, converged=sample.converged)
            from .contacts import classify_active
            result.active_contacts = classify_active(build_cluster(result.params), result.basis,
                                                     config.active_tol)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if not isinstance(exc, InfeasibleStartError) else EXIT_INFEASIBLE
    out = args.out or "result.txt"
    files.write_result(out, result, command="optimize", variant=args.variant)
    if args.manifest:
        files.write_manifest(args.manifest, "optimize", vars(args), [out])
    print(f"u={result.params.u:.12g} v={result.params.v:.12g} "
          f"V={result.V:.12g} D={result.D:.12g} converged={result.converged}")
    if not result.converged:
        print(f"warning: {result.message}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.grid < 2:
        print("error: --grid must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    config = _config(args, args.variant)
    samples = optimizer.sweep(args.grid, args.variant, config, threads=args.threads)
    out = args.out or "sweep.csv"
    files.write_sweep_csv(out, samples)
    if args.manifest:
        files.write_manifest(args.manifest, "sweep", vars(args), [out])
    n_ok = sum(1 for s in samples if s.converged)
    print(f"wrote {len(samples)} samples ({n_ok} converged) to {out}")
    return EXIT_OK if n_ok else EXIT_NO_CONVERGENCE


def cmd_verify(args) -> int:
    tol = args.tol if args.tol is not None else verify.FAIL_TOL
    if args.sym:
        _, result = verify.build_sym_packing()
        params, basis = result.params, result.basis
    elif args.input:
        doc = files.read_result(args.input)
        params, basis = doc["params"], doc["basis"]
    else:
        print("error: provide --in FILE or --sym", file=sys.stderr)
        return EXIT_USAGE
    cluster = build_cluster(params)
    cutoff = args.cutoff if args.cutoff is not None else default_cutoff(cluster)
    report = verify.certify(cluster, basis, cutoff, tol)
    V = lattice_volume(basis)
    out = args.out or "certificates.txt"
    verify.write_certificates(out, report, cluster, basis, V, density(V))
    if args.manifest:
        files.write_manifest(args.manifest, "verify", vars(args), [out])
    print(f"{len(report.certificates)} pairs, {len(report.failures)} failures -> {out}")
    return EXIT_OK if report.all_ok else EXIT_VERIFY_FAIL


def cmd_export(args) -> int:
    doc = files.read_result(args.input)
    cluster = build_cluster(doc["params"])
    cutoff = args.shells * default_cutoff(cluster) if args.shells > 0 else 0.0
    out = args.out or "scene.obj"
    files.write_obj(out, cluster, doc["basis"], cutoff)
    if args.manifest:
        files.write_manifest(args.manifest, "export", vars(args), [out], inputs=[args.input])
    print(f"wrote {out}")
    return EXIT_OK


def cmd_reference(args) -> int:
    constants = verify.reference_constants()
    sym, result = verify.build_sym_packing()
    rows = [(k, v) for k, v in constants.items()]
    rows += [("sym_i", sym.i), ("sym_j", sym.j), ("sym_k", sym.k),
             ("sym_volume", result.V)]
    lines = [f"{name:32s} {value:.12f}" for name, value in rows]
    text = "\n".join(lines)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


_COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "export": cmd_export,
    "reference": cmd_reference,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
