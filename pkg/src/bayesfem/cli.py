"""Config-driven experiment runner.

Subcommands:
  run <config.json>              full pipeline, writes CSV/VTK + report.json
  verify <config.json>           invariant suite for the configured instance
  export-matrix <config.json> --which K|M|Kc|Phi   triplet text export

Exit codes: 0 success, 1 verification failure, 2 config error,
3 numerical error, 4 mesh parse error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly, bayes, mesh as meshmod, sampling, sparse
from .errors import (
    BayesFemError,
    CapacityError,
    ConfigError,
    InvalidArgumentError,
    MeshParseError,
    NotPositiveDefiniteError,
)
from .io import write_ensemble_csv, write_profile_csv, write_triplets, write_vtk

REPORT_SCHEMA_VERSION = 1

_EXPR_NAMES = {
    "pi": math.pi, "e": math.e, "sin": math.sin, "cos": math.cos,
    "tan": math.tan, "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
    "abs": abs, "min": min, "max": max,
}


def _compile_expr(expr, fieldname, variables):
    try:
        code = compile(expr, f"<{fieldname}>", "eval")
    except SyntaxError as exc:
        raise ConfigError(fieldname, f"invalid expression: {exc.msg}") from None

    def fn(*args):
        scope = dict(_EXPR_NAMES)
        scope.update(zip(variables, args))
        return eval(code, {"__builtins__": {}}, scope)

    try:
        fn(*([0.5] * len(variables)))
    except Exception as exc:
        raise ConfigError(fieldname, f"expression failed to evaluate: {exc}") from None
    return fn


@dataclass
class ExperimentConfig:
    """Validated experiment description resolved from a JSON document."""

    problem: str                       # "bar" | "plate" | "mesh-file"
    mesh_file: Path | None
    operator: object
    load: object                       # callable matching the operator arity
    coarse_elements: int
    refine_levels: int
    dirichlet_tags: list[str]
    prior: bayes.PriorSpec
    n_samples: int
    seed: int
    sample_method: str                 # "via_f" | "via_u"
    output_dir: Path
    samples_in_table: int
    write_ensemble: bool
    dense_cap: int
    raw: dict = field(default_factory=dict, repr=False)


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    return parse_config(raw, base_dir=path.parent)


def _get(raw, fieldname, default=None, cast=None, required=False):
    parts = fieldname.split(".")
    node = raw
    for p in parts:
        if not isinstance(node, dict) or p not in node:
            if required:
                raise ConfigError(fieldname, "missing required field")
            return default
        node = node[p]
    if cast is not None:
        try:
            return cast(node)
        except (TypeError, ValueError):
            raise ConfigError(fieldname, f"cannot interpret {node!r}") from None
    return node


def parse_config(raw, base_dir="."):
    base_dir = Path(base_dir)
    problem = _get(raw, "problem", required=True)
    mesh_file = None
    if isinstance(problem, dict):
        mf = _get(problem, "mesh_file", required=True)
        mesh_file = base_dir / mf
        problem = "mesh-file"
    elif problem not in ("bar", "plate"):
        raise ConfigError("problem", f"expected 'bar', 'plate' or mesh-file object, got {problem!r}")

    is_1d = problem == "bar"
    op_raw = _get(raw, "operator", default={})
    op_type = op_raw.get("type", "poisson1d" if is_1d else "plane_stress")
    if op_type == "poisson1d":
        if not is_1d:
            raise ConfigError("operator.type", "poisson1d requires the bar problem")
        ea_expr = op_raw.get("ea", "0.1 - 0.099*x")
        operator = assembly.Poisson1D(coefficient=_compile_expr(ea_expr, "operator.ea", ("x",)))
    elif op_type == "plane_stress":
        if is_1d:
            raise ConfigError("operator.type", "plane_stress requires a 2D problem")
        operator = assembly.PlaneStress(
            youngs_modulus=_get(op_raw, "youngs_modulus", 3.0, float),
            poisson_ratio=_get(op_raw, "poisson_ratio", 0.2, float),
            thickness=_get(op_raw, "thickness", 1.0, float),
        )
    else:
        raise ConfigError("operator.type", f"unknown operator {op_type!r}")

    load_raw = _get(raw, "load", default={})
    if is_1d:
        load = _compile_expr(str(load_raw.get("expr", "1")), "load.expr", ("x",))
    else:
        fx = _get(load_raw, "fx", 1.0, float)
        fy = _get(load_raw, "fy", 0.0, float)
        load = lambda x, y: (fx, fy)  # noqa: E731

    coarse_elements = _get(raw, "coarse_elements", 4, int)
    if coarse_elements < 1:
        raise ConfigError("coarse_elements", "must be >= 1")
    refine_levels = _get(raw, "refine_levels", 4 if is_1d else 1, int)
    if refine_levels < 0:
        raise ConfigError("refine_levels", "must be >= 0")

    default_tags = ["left", "right"] if is_1d else ["left"]
    tags = _get(raw, "dirichlet_tags", default_tags)
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ConfigError("dirichlet_tags", "must be a list of tag names")

    prior_raw = _get(raw, "prior", default={})
    kind = prior_raw.get("kind", "greens")
    try:
        prior = bayes.PriorSpec(
            kind=kind,
            alpha=_get(prior_raw, "alpha", 1.0, float),
            sigma_e=prior_raw.get("sigma_e"),
        )
    except InvalidArgumentError as exc:
        raise ConfigError("prior", str(exc)) from None

    ens_raw = _get(raw, "ensemble", default={})
    n_samples = _get(ens_raw, "n_samples", 0, int)
    seed = _get(ens_raw, "seed", 0, int)
    method = ens_raw.get("method", "via_f")
    if method not in ("via_f", "via_u"):
        raise ConfigError("ensemble.method", f"unknown method {method!r}")
    if n_samples < 0:
        raise ConfigError("ensemble.n_samples", "must be >= 0")

    out_raw = _get(raw, "outputs", default={})
    output_dir = base_dir / out_raw.get("directory", "out")
    samples_in_table = _get(out_raw, "samples_in_table", min(30, n_samples), int)
    write_ensemble = bool(out_raw.get("write_ensemble_csv", False))
    dense_cap = _get(raw, "dense_cap", sparse.DENSE_CAP_DEFAULT, int)

    return ExperimentConfig(
        problem=problem, mesh_file=mesh_file, operator=operator, load=load,
        coarse_elements=coarse_elements, refine_levels=refine_levels,
        dirichlet_tags=tags, prior=prior, n_samples=n_samples, seed=seed,
        sample_method=method, output_dir=output_dir,
        samples_in_table=min(samples_in_table, n_samples),
        write_ensemble=write_ensemble, dense_cap=dense_cap, raw=raw,
    )


def packaged_plate_mesh():
    """Parse the committed perforated-plate coarse mesh asset."""
    data = importlib.resources.files("bayesfem").joinpath("data/plate_coarse.msh")
    return meshmod.parse_mesh_file(data.read_text())


def build_hierarchy(config):
    if config.problem == "bar":
        coarse = meshmod.generate_interval_mesh(config.coarse_elements, 0.0, 1.0)
    elif config.problem == "plate":
        coarse = packaged_plate_mesh()
    else:
        coarse = meshmod.parse_mesh_file(config.mesh_file.read_text())
    if config.refine_levels == 0:
        return meshmod.identity_hierarchy(coarse)
    return meshmod.refine_hierarchical(coarse, config.refine_levels)


def build_problem(config):
    hierarchy = build_hierarchy(config)
    system = assembly.build_system(hierarchy, config.operator, config.load, config.dirichlet_tags)
    return hierarchy, system


def _full_vector(values, partition):
    """Scatter an interior vector into the full DOF vector (zeros on Dirichlet)."""
    out = np.zeros(partition.n_dofs)
    out[partition.interior] = values
    return out


def _node_magnitude(values, dofs_per_node):
    if dofs_per_node == 1:
        return values
    return np.hypot(values[0::2], values[1::2])


def _direct_coarse_residuals(hierarchy, config, system):
    """Independent direct coarse assembly vs the restricted quantities."""
    coarse_sys_K = assembly.assemble_stiffness(hierarchy.coarse, config.operator)
    dpn = config.operator.dofs_per_node
    coarse_f = assembly.assemble_load(hierarchy.coarse, config.load, dpn)
    i_c = system.coarse_partition.interior
    Kc_direct = coarse_sys_K.tocsr()[i_c][:, i_c]
    dK = abs(system.Kc - Kc_direct).max()
    scale_K = abs(system.Kc).max()
    dg = np.abs(system.g - coarse_f[i_c]).max()
    scale_g = max(np.abs(system.g).max(), 1e-300)
    return float(dK / scale_K), float(dg / scale_g)


def run_experiment(config):
    """Run the configured experiment, write all artifacts, return the report."""
    t0 = time.perf_counter()
    timings = {}
    hierarchy, system = build_problem(config)
    timings["assembly_s"] = time.perf_counter() - t0

    prior = config.prior
    t1 = time.perf_counter()
    post = bayes.posterior_moments(prior, system)
    u_hat = post.K_factor.solve(system.f)
    u_coarse = sparse.cholesky(system.Kc).solve(system.g)
    coarse_on_fine = system.Phi @ u_coarse
    e = u_hat - coarse_on_fine
    timings["posterior_s"] = time.perf_counter() - t1

    n_i = system.n_interior
    within_cap = n_i <= config.dense_cap

    diagnostics = {}
    dK_res, dg_res = _direct_coarse_residuals(hierarchy, config, system)
    diagnostics["galerkin_Kc_residual"] = dK_res
    diagnostics["galerkin_g_residual"] = dg_res
    diagnostics["mean_vs_coarse_residual"] = float(
        np.linalg.norm(post.mean - coarse_on_fine) / max(np.linalg.norm(u_coarse), 1e-300)
    )
    if prior.kind == "greens" and prior.sigma_e == 0:
        rec = bayes.error_recovery(post, system.f)
        diagnostics["error_recovery_residual"] = float(
            np.linalg.norm(rec - e) / max(np.linalg.norm(e), 1e-300)
        )

    std = None
    ensemble = None
    if config.n_samples > 0:
        t2 = time.perf_counter()
        sampler = (sampling.sample_posterior_via_f if config.sample_method == "via_f"
                   else sampling.sample_posterior_via_u)
        ensemble = sampler(prior, system, config.n_samples, config.seed)
        timings["sampling_s"] = time.perf_counter() - t2

    sigma_hat_diag = None
    if within_cap:
        t3 = time.perf_counter()
        Sigma_star = post.dense_cov(config.dense_cap)
        std = np.sqrt(np.maximum(np.diag(Sigma_star), 0.0))
        lam_min = float(np.linalg.eigvalsh(Sigma_star).min())
        diagnostics["posterior_cov_min_eigenvalue"] = lam_min
        diagnostics["posterior_cov_max_abs"] = float(np.abs(Sigma_star).max())
        Sigma_prior = post.dense_prior_cov(config.dense_cap)
        diagnostics["prior_cov_max_abs"] = float(np.abs(Sigma_prior).max())
        diagnostics["contraction_residual"] = bayes.contraction_check(
            prior, system, config.dense_cap
        )
        Sigma_hat, _, _ = bayes.rescale_eigenvalues(Sigma_star, system.f, config.dense_cap)
        sigma_hat_diag = np.sqrt(np.maximum(np.diag(Sigma_hat), 0.0))
        timings["dense_covariance_s"] = time.perf_counter() - t3
    elif ensemble is not None and ensemble.n_samples >= 2:
        std = np.sqrt(sampling.ensemble_stats(ensemble).cov_diag())
    else:
        raise CapacityError(
            f"interior dimension {n_i} exceeds dense cap {config.dense_cap} and no "
            "ensemble was configured for the standard deviation field"
        )

    config.output_dir.mkdir(parents=True, exist_ok=True)
    part = system.fine_partition
    fields = {
        "mean": _full_vector(post.mean, part),
        "std": _full_vector(std, part),
        "coarse": _full_vector(coarse_on_fine, part),
        "fine": _full_vector(u_hat, part),
        "error": _full_vector(e, part),
    }
    k = config.samples_in_table
    sample_block = None
    if ensemble is not None and k > 0:
        sample_block = np.column_stack(
            [_full_vector(ensemble.X[:, j], part) for j in range(k)]
        )

    outputs = {}
    if hierarchy.fine.dim == 1:
        x = hierarchy.fine.nodes[:, 0]
        order = np.argsort(x, kind="stable")
        table = {name: vec[order] for name, vec in fields.items()}
        csv_path = config.output_dir / "profile.csv"
        write_profile_csv(
            csv_path, x[order], table,
            None if sample_block is None else sample_block[order],
        )
        outputs["profile_csv"] = str(csv_path)
    else:
        dpn = part.dofs_per_node
        point_data = {name: _node_magnitude(vec, dpn) for name, vec in fields.items()}
        rescaled = (_full_vector(sigma_hat_diag, part) if sigma_hat_diag is not None
                    else np.zeros(part.n_dofs))
        point_data["std_rescaled"] = _node_magnitude(rescaled, dpn)
        vtk_path = config.output_dir / "fields.vtk"
        write_vtk(vtk_path, hierarchy.fine, point_data)
        outputs["fields_vtk"] = str(vtk_path)

    if config.write_ensemble and ensemble is not None:
        ens_path = config.output_dir / "ensemble.csv"
        write_ensemble_csv(ens_path, ensemble)
        outputs["ensemble_csv"] = str(ens_path)

    timings["total_s"] = time.perf_counter() - t0
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "problem": config.problem,
        "n_interior": int(n_i),
        "m_interior": int(system.m_interior),
        "prior": {"kind": prior.kind, "alpha": prior.alpha, "sigma_e": prior.sigma_e},
        "diagnostics": diagnostics,
        "outputs": outputs,
        "timings": timings,
    }
    report_path = config.output_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs["report_json"] = str(report_path)
    return report


def verify(config):
    """Run the invariant suite on the configured instance.

    Returns (ok, checks) where checks maps check name -> (passed, value).
    """
    hierarchy, system = build_problem(config)
    prior = config.prior
    checks = {}

    dK_res, dg_res = _direct_coarse_residuals(hierarchy, config, system)
    checks["galerkin_Kc"] = (dK_res <= 1e-12, dK_res)
    checks["galerkin_g"] = (dg_res <= 1e-12, dg_res)

    P = hierarchy.prolongation
    row_sum_dev = float(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0).max())
    checks["partition_of_unity"] = (row_sum_dev <= 1e-12, row_sum_dev)

    sym_dev = float(abs(system.K - system.K.T).max() / abs(system.K).max())
    checks["stiffness_symmetry"] = (sym_dev <= 1e-12, sym_dev)

    post = bayes.posterior_moments(prior, system)
    u_coarse = sparse.cholesky(system.Kc).solve(system.g)
    if prior.kind == "greens":
        res = float(
            np.linalg.norm(post.mean - system.Phi @ u_coarse)
            / max(np.linalg.norm(u_coarse), 1e-300)
        )
        checks["mean_equals_coarse"] = (res <= 1e-10, res)
        if prior.sigma_e == 0:
            e = bayes.discretization_error(system)
            rec = bayes.error_recovery(post, system.f)
            res = float(np.linalg.norm(rec - e) / max(np.linalg.norm(e), 1e-300))
            checks["error_recovery"] = (res <= 1e-8, res)
    else:
        # alpha invariance of the mean, covariance scaling by alpha^2
        post_half = bayes.posterior_moments(
            bayes.PriorSpec.white_noise(alpha=prior.alpha * 2, sigma_e=prior.sigma_e), system
        )
        res = float(np.linalg.norm(post.mean - post_half.mean)
                    / max(np.linalg.norm(post.mean), 1e-300))
        checks["alpha_mean_invariance"] = (res <= 1e-12, res)
        if prior.sigma_e == 0 and system.n_interior <= config.dense_cap:
            C1 = post.dense_cov(config.dense_cap)
            C2 = post_half.dense_cov(config.dense_cap)
            res = float(np.abs(C2 - 4.0 * C1).max() / max(np.abs(C1).max(), 1e-300))
            checks["alpha_cov_scaling"] = (res <= 1e-10, res)

    if system.n_interior <= config.dense_cap:
        res = bayes.contraction_check(prior, system, config.dense_cap)
        tol = 1e-8 if prior.sigma_e == 0 else 1e-4
        checks["contraction_identity"] = (res <= tol, res)

    ok = all(passed for passed, _ in checks.values())
    return ok, checks


def _cmd_run(args):
    config = load_config(args.config)
    report = run_experiment(config)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_verify(args):
    config = load_config(args.config)
    ok, checks = verify(config)
    for name, (passed, value) in checks.items():
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {value:.3e}")
    return 0 if ok else 1


def _cmd_export_matrix(args):
    config = load_config(args.config)
    _, system = build_problem(config)
    matrices = {"K": system.K, "M": system.M, "Kc": system.Kc, "Phi": system.Phi}
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / f"{args.which}.txt"
    write_triplets(path, matrices[args.which])
    print(path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bayesfem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)
    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("config")
    p_verify.set_defaults(func=_cmd_verify)
    p_exp = sub.add_parser("export-matrix", help="export an assembled matrix as triplets")
    p_exp.add_argument("config")
    p_exp.add_argument("--which", required=True, choices=["K", "M", "Kc", "Phi"])
    p_exp.set_defaults(func=_cmd_export_matrix)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MeshParseError as exc:
        print(f"mesh parse error: {exc}", file=sys.stderr)
        return 4
    except (NotPositiveDefiniteError, CapacityError, FloatingPointError) as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except InvalidArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BayesFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
