"""Command line interface: ``shell verify|analyze|minimize|reconstruct``.

Exit codes: 0 success, 2 validation failure, 3 verification failure,
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

import jsonschema
import numpy as np

from . import analysis, io
from .config import RunConfig, load_config, load_schema
from .energy import (
    density_h3,
    rewriting_identity_residual,
    w_mp,
    w_shell,
    w_shell_bilinear,
    w_shell_cartan,
)
from .errors import ConditionsViolated, LineSearchFailure, ShellError
from .geometry import TabulatedPatch, grid_points, identity_suite, is_injective
from .kinematics import (
    anti,
    axl,
    bending_curvature_tensor,
    nye_alpha_from_gamma,
    nye_gamma_from_alpha,
    strain_tensor,
    strain_tensor_total_rotation,
)
from .reconstruction import reconstruct
from .solver import SolverOptions, minimize
from .tensors import rotation_exp, skew, trace, transpose

EXIT_OK, EXIT_VALIDATION, EXIT_VERIFICATION, EXIT_NONCONVERGENCE = 0, 2, 3, 4

log = logging.getLogger("cosserat_shell")

ALGEBRAIC_TOL = 1e-10
FD_TOL = 1e-6
FD_TOL_TABULATED = 1e-4


def sample_rotation_field(x1, x2):
    """Smooth rotation field used to exercise the director-derivative identity."""
    w = np.stack([0.3 * np.sin(x1 + 0.5 * x2), 0.4 * x1 * x2 - 0.2, 0.25 * np.cos(x2 - x1)], axis=-1)
    return rotation_exp(w)


def _validate_output(doc: dict, name: str) -> None:
    jsonschema.validate(io._plain(doc), load_schema(name))


def _max(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def verify_checks(rc: RunConfig) -> dict:
    """Identity, roundtrip and quadratic-form residuals over the analysis grid."""
    rng = np.random.default_rng(rc.seed)
    X1, X2 = grid_points(rc.patch, *rc.analysis_grid)
    frame = rc.patch.frame(X1.ravel(), X2.ravel())
    n = frame.H.shape[0]
    E = rng.uniform(-1, 1, (n, 3, 3)) @ frame.A
    Kc = rng.uniform(-1, 1, (n, 3, 3)) @ frame.A
    suite = identity_suite(frame, E, Kc, rotation=sample_rotation_field, patch=rc.patch)
    fd_tol = FD_TOL_TABULATED if isinstance(rc.patch, TabulatedPatch) else FD_TOL

    checks = {}

    def add(name, residual, tol):
        checks[name] = {"residual": float(residual), "tolerance": tol, "passed": bool(residual <= tol)}

    for k, v in suite.items():
        add(f"geometry.{k}", v, fd_tol if k == "director_derivative" else ALGEBRAIC_TOL)
    add("geometry.injective", 0.0 if is_injective(rc.patch, *rc.analysis_grid) else 1.0, 0.0)
    add("geometry.lambda0_positive", 0.0 if np.all(frame.lambda0 > 0) else 1.0, 0.0)
    if rc.a0 is not None:
        add("geometry.area_element_above_a0", max(0.0, rc.a0 - float(frame.area_element.min())), 0.0)

    # kinematics
    v = rng.uniform(-1, 1, (n, 3))
    add("kinematics.axl_anti_roundtrip", _max(axl(anti(v)) - v), 1e-15)
    S = skew(rng.uniform(-1, 1, (n, 3, 3)))
    add("kinematics.anti_axl_roundtrip", _max(anti(axl(S)) - S), 1e-15)
    G = rng.uniform(-1, 1, (n, 3, 3))
    G[..., 2] = 0.0
    add("kinematics.nye_roundtrip", _max(nye_gamma_from_alpha(nye_alpha_from_gamma(G)) - G), 1e-14)
    Q = rotation_exp(rng.uniform(-1, 1, (n, 3)))
    gm = rng.uniform(-1, 1, (n, 3, 2))
    add(
        "kinematics.strain_forms_agree",
        _max(strain_tensor(gm, Q, frame) - strain_tensor_total_rotation(gm, Q, frame)),
        1e-12,
    )
    R = rotation_exp(rng.uniform(-1, 1, 3))
    Rn = np.broadcast_to(R, (n, 3, 3))
    zero = np.zeros((n, 3, 3))
    add("kinematics.rigid_strain", _max(strain_tensor(R @ frame.grad_y0, Rn, frame)), 1e-12)
    add("kinematics.rigid_curvature", _max(bending_curvature_tensor(Rn, zero, zero, frame)), 0.0)

    # energy forms
    mat = rc.mat
    S = rng.uniform(-1, 1, (n, 3, 3))
    T = rng.uniform(-1, 1, (n, 3, 3))
    add("energy.cartan_form", _max(w_shell(S, mat) - w_shell_cartan(S, mat)), 1e-12)
    mpmix = mat.lam**2 / (2 * (mat.lam + 2 * mat.mu)) * trace(S) ** 2
    add("energy.mp_minus_shell", _max(w_mp(S, mat) - w_shell(S, mat) - mpmix), 1e-12)
    pol = 0.5 * (w_shell(S + T, mat) - w_shell(S, mat) - w_shell(T, mat))
    add("energy.polarization", _max(pol - w_shell_bilinear(S, T, mat)), 1e-12)
    scale = max(1.0, _max(density_h3(E, Kc, frame, mat)[0]))
    add("energy.rewriting_identity", _max(rewriting_identity_residual(E, Kc, frame, mat)) / scale, 1e-12)
    num = np.array(analysis.quadratic_form_eigs(mat))
    closed = np.array(analysis.closed_form_eigs(mat))
    add("analysis.eigenvalues", _max(num - closed), 1e-12)
    return {"points": n, "checks": checks}


def cmd_verify(rc: RunConfig) -> int:
    res = verify_checks(rc)
    passed = all(c["passed"] for c in res["checks"].values())
    doc = {
        "command": "verify",
        "passed": passed,
        "patch": {"kind": rc.patch.kind, "params": rc.patch.params, "domain": list(rc.patch.domain)},
        **res,
    }
    _validate_output(doc, "verify_report")
    path = io.write_json(rc.output_path("report"), doc)
    failed = [k for k, c in res["checks"].items() if not c["passed"]]
    print(f"verify: {'passed' if passed else 'FAILED'} ({len(res['checks'])} checks) -> {path}")
    for k in failed:
        c = res["checks"][k]
        print(f"  {k}: residual {c['residual']:.3e} > {c['tolerance']:.1e}")
    return EXIT_OK if passed else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(rc: RunConfig) -> int:
    X1, X2 = grid_points(rc.patch, *rc.analysis_grid)
    frame = rc.patch.frame(X1.ravel(), X2.ravel())
    rep = analysis.analyze(rc.mat, frame, rc.samples, rc.seed)
    doc = {"command": "analyze", "seed": rc.seed, **rep.to_dict()}
    _validate_output(doc, "analyze_report")
    path = io.write_json(rc.output_path("report"), doc)
    c = rep.conditions
    print(
        f"analyze: c1p={rep.c1p:.6g} C1p={rep.C1p:.6g} c2p={rep.c2p:.6g} C2p={rep.C2p:.6g} "
        f"h5_ok={c['h5_thickness_ok']} h3_i={c['h3_condition_i']} h3_ii={c['h3_condition_ii']} -> {path}"
    )
    bad = sum(rep.violations.values())
    return EXIT_VERIFICATION if bad else EXIT_OK


# ---------------------------------------------------------------------------
# minimize / reconstruct
# ---------------------------------------------------------------------------


def _write_run(rc: RunConfig, cfg, trace, prob_breakdown, override: bool) -> dict:
    Q = cfg.Q()
    ortho = _max(transpose(Q) @ Q - np.eye(3))
    summary = {
        "command": "minimize",
        "order": rc.order,
        "total_energy": prob_breakdown.total,
        "breakdown": prob_breakdown.to_dict(),
        "iterations": trace.iterations,
        "converged": trace.converged,
        "status": trace.status,
        "thickness_override": bool(trace.thickness_override),
        "dirichlet_residual": cfg.dirichlet_residual(),
        "rotation_orthonormality": ortho,
        "grad_norm": float(trace.grad_norms[-1]),
        "grid": [rc.grid.nx, rc.grid.ny],
        "seed": rc.seed,
    }
    _validate_output(summary, "summary")
    io.write_trace_csv(rc.output_path("trace"), trace)
    io.write_obj(rc.output_path("mesh"), cfg.m)
    io.write_json(rc.output_path("solution"), io.solution_document(cfg))
    io.write_json(rc.output_path("summary"), summary)
    return summary


def cmd_minimize(rc: RunConfig, override: bool = False) -> int:
    from .discrete import DiscreteProblem

    prob = DiscreteProblem(rc.patch, rc.grid, rc.mat, rc.loads, rc.order)
    opts = SolverOptions(max_iter=rc.max_iter, gtol=rc.gtol, method=rc.method)
    cfg0 = rc.initial_configuration()
    try:
        cfg, trace = minimize(cfg0, rc.patch, rc.mat, rc.loads, rc.order, opts, override, problem=prob)
    except LineSearchFailure as exc:
        print(f"minimize: line search failed: {exc}", file=sys.stderr)
        if exc.config is not None and exc.trace is not None:
            exc.trace.status = "line_search_failure"
            _write_run(rc, exc.config, exc.trace, prob.breakdown(exc.config), override)
        return EXIT_NONCONVERGENCE
    summary = _write_run(rc, cfg, trace, prob.breakdown(cfg), override)
    print(
        f"minimize: {trace.status} after {trace.iterations} iterations, "
        f"total energy {summary['total_energy']:.6e} -> {rc.output_dir}"
    )
    return EXIT_OK if trace.converged else EXIT_NONCONVERGENCE


def cmd_reconstruct(rc: RunConfig, solution: str | None = None) -> int:
    from .discrete import ShellConfiguration

    template = ShellConfiguration.reference(rc.patch, rc.grid, rc.dirichlet, rc.clamp_rotations)
    path = solution or rc.output_path("solution")
    cfg = io.read_solution(path, template)
    slab = reconstruct(cfg, rc.patch, rc.mat, rc.nz)
    out = io.write_vtk(rc.output_path("slab"), slab)
    mid = _max(slab.phi[:, :, rc.nz // 2] - cfg.m)
    doc = {
        "command": "reconstruct",
        "slab": out.name,
        "shape": list(slab.shape),
        "rho_m_range": [float(slab.rho_m.min()), float(slab.rho_m.max())],
        "rho_b_range": [float(slab.rho_b.min()), float(slab.rho_b.max())],
        "midplane_residual": mid,
    }
    _validate_output(doc, "reconstruct_report")
    io.write_json(rc.output_dir / "reconstruction.json", doc)
    print(f"reconstruct: slab {slab.shape} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shell", description="Cosserat shell energies, analysis and minimization.")
    p.add_argument("command", choices=["verify", "analyze", "minimize", "reconstruct"])
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="override solver.seed")
    p.add_argument(
        "--override-thickness-check",
        action="store_true",
        help="run the solver even if the thickness conditions fail (recorded in the summary)",
    )
    p.add_argument("--solution", default=None, help="solution.json for reconstruct (default: output dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = load_config(args.config, args.seed)
        if args.command == "verify":
            return cmd_verify(rc)
        if args.command == "analyze":
            return cmd_analyze(rc)
        if args.command == "minimize":
            return cmd_minimize(rc, args.override_thickness_check)
        return cmd_reconstruct(rc, args.solution)
    except ConditionsViolated as exc:
        print(f"error: {exc} (use --override-thickness-check to proceed)", file=sys.stderr)
        return EXIT_VALIDATION
    except ShellError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
