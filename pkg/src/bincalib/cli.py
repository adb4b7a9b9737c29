"""Command-line entry points wrapping the library pipelines.

Every subcommand validates its config, runs the corresponding library
call, and writes versioned JSON results stamped with the config hash and
seed. Failures exit nonzero after printing a machine-readable error
object, so shell pipelines can branch on structured output instead of
scraping tracebacks.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from .artifacts import load_model, save_model
from .calibrate import L2Objective, calibrate
from .config import RunConfig, load_config
from .errors import BincalibError, InputError
from .gpc import GpcModel, cv_tune_gpc, fit_gpc, predict_p
from .inference import estimate_V, estimate_W, sandwich
from .io import read_computer_csv, read_physical_csv
from .klr import KlrModel, cv_tune_klr, fit_klr
from .sensitivity import sobol_first_order

RESULT_VERSION = 1

__all__ = ["cmd_fit_physical", "cmd_fit_emulator", "cmd_calibrate",
           "cmd_sobol", "cmd_bench", "main"]


def _write_json(path, body):
    with open(path, "w") as fh:
        json.dump(body, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _base_result(cfg: RunConfig, seed: int) -> dict:
    return {"format_version": RESULT_VERSION,
            "config_hash": cfg.config_hash(), "seed": int(seed)}


def cmd_fit_physical(cfg: RunConfig, physical_csv, seed: int, out_dir="."
                     ) -> KlrModel:
    """Tune and fit the physical-surface classifier; writes its artifact."""
    data = read_physical_csv(physical_csv, cfg.domain_x())
    spec, lam = cv_tune_klr(data, rho_grid=cfg.rho_grid,
                            lambda_grid=cfg.lambda_grid, folds=cfg.folds,
                            seed=seed)
    model = fit_klr(data, spec, lam)
    os.makedirs(out_dir, exist_ok=True)
    save_model(model, os.path.join(out_dir, "eta_model.json"))
    body = _base_result(cfg, seed)
    body.update(kind="klr", n=model.n, rho=spec.rho, lam=lam,
                converged=bool(model.train_log.converged))
    _write_json(os.path.join(out_dir, "fit_physical.json"), body)
    return model


def cmd_fit_emulator(cfg: RunConfig, computer_csv, seed: int, out_dir="."
                     ) -> GpcModel:
    """Tune and fit the binary-output emulator; writes its artifact."""
    data = read_computer_csv(computer_csv, cfg.domain_x(),
                             cfg.domain_theta())
    spec = cv_tune_gpc(data, cfg.phi_grid, folds=cfg.folds, seed=seed)
    model = fit_gpc(data, spec)
    os.makedirs(out_dir, exist_ok=True)
    save_model(model, os.path.join(out_dir, "p_model.json"))
    body = _base_result(cfg, seed)
    body.update(kind="gpc", n_train=model.n_train, phi=spec.phi,
                converged=bool(model.train_log.converged))
    _write_json(os.path.join(out_dir, "fit_emulator.json"), body)
    return model


def cmd_calibrate(cfg: RunConfig, eta_path, p_path, seed: int, out_dir="."):
    """Calibrate from fitted artifacts and report estimate plus SEs."""
    eta_model = load_model(eta_path)
    p_model = load_model(p_path)
    if not isinstance(eta_model, KlrModel) or not isinstance(p_model, GpcModel):
        raise InputError("calibrate needs a physical-surface artifact and "
                         "an emulator artifact, in that order")
    obj = L2Objective.from_models(eta_model, p_model, M=cfg.quadrature_m,
                                  seed=seed)
    res = calibrate(obj, n_starts=cfg.n_starts, seed=seed)

    box = p_model.domain_theta

    def p_fn(nodes, theta):
        return obj.surface(np.atleast_2d(theta))[:, 0]

    V = estimate_V(obj.eta_vals, p_fn, res.theta_hat, obj.quad_points, box)
    W = estimate_W(obj.eta_vals, p_fn, res.theta_hat, obj.quad_points, box)
    report = sandwich(V, W, n=eta_model.n,
                      jacobian=box.jacobian_from_unit(res.theta_hat),
                      boundary=res.boundary)

    names = list(box.names)
    body = _base_result(cfg, seed)
    body.update(
        parameter_names=names,
        theta_hat=[float(v) for v in res.theta_hat],
        se=[float(v) for v in report.se],
        cov=[[float(v) for v in row] for row in report.cov],
        l2_distance=float(res.l2_distance),
        cond_V=float(report.cond_V), mode=report.mode,
        flat=bool(res.flat_flag), boundary=bool(res.boundary),
        n_physical=eta_model.n, quadrature_m=obj.M)
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "calibration.json"), body)

    lines = [f"L2 distance at the estimate: {res.l2_distance:.6g}"]
    for name, value, se in zip(names, res.theta_hat, report.se):
        lines.append(f"  {name} = {value:.6g}  (se {se:.3g})")
    if res.boundary:
        lines.append("note: estimate on the parameter-box boundary; "
                     "standard errors assume an interior optimum")
    if res.flat_flag:
        lines.append("note: objective is flat across starts; the estimate "
                     "may not be unique")
    print("\n".join(lines))
    return res, report


def cmd_sobol(cfg: RunConfig, p_path, seed: int, out_dir=".",
              n_mc: int = 4096, include_x: bool = False):
    """First-order sensitivity of the emulator to its inputs."""
    p_model = load_model(p_path)
    if not isinstance(p_model, GpcModel):
        raise InputError("sobol needs an emulator artifact")

    def p_fn(xs, thetas):
        return predict_p(p_model, xs, thetas)

    result = sobol_first_order(p_fn, p_model.domain_x, p_model.domain_theta,
                               n_mc=n_mc, seed=seed, include_x=include_x)
    body = _base_result(cfg, seed)
    body.update(
        names=list(result.names),
        indices=[float(v) for v in result.indices],
        ci_lo=[float(v) for v in result.ci_lo],
        ci_hi=[float(v) for v in result.ci_hi],
        n_mc=int(result.n_mc), n_boot=int(result.n_boot))
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "sobol.json"), body)
    for name, s, lo, hi in zip(result.names, result.indices, result.ci_lo,
                               result.ci_hi):
        print(f"  S[{name}] = {s:.4f}  [{lo:.4f}, {hi:.4f}]")
    return result


_SCENARIOS = {"study41": bench_mod.run_table1,
              "study42": bench_mod.run_table2,
              "naive": bench_mod.run_naive_comparison}


def cmd_bench(scenario: str, out_dir=".", **overrides):
    """Run a named synthetic study and write its report files."""
    key = scenario.lower()
    if key not in _SCENARIOS:
        raise InputError(f"unknown scenario {scenario!r}; choose from "
                         f"{sorted(_SCENARIOS)}")
    report = _SCENARIOS[key](**overrides)
    os.makedirs(out_dir, exist_ok=True)
    paths = bench_mod.write_report(report, out_dir)
    settings = {"scenario": key}
    settings.update({k: int(v) for k, v in sorted(overrides.items())
                     if k != "n_jobs"})
    import hashlib
    blob = json.dumps(settings, sort_keys=True, separators=(",", ":"))
    meta = {"format_version": RESULT_VERSION,
            "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
            "settings": settings,
            "files": sorted(os.path.basename(p) for p in paths.values())}
    _write_json(os.path.join(out_dir, "bench.json"), meta)
    print(f"scenario {key}: mean {np.round(report.mean, 4).tolist()} "
          f"sd {np.round(report.sd, 4).tolist()} "
          f"({len(report.rows)} replicates, {len(report.failures)} failed)")
    return report


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bincalib",
        description="Calibration of binary-output computer experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes (bench replicates only)")

    p = sub.add_parser("fit-physical", help="fit the physical surface")
    common(p)
    p.add_argument("--data", default=None,
                   help="physical CSV (defaults to the config entry)")

    p = sub.add_parser("fit-emulator", help="fit the simulator emulator")
    common(p)
    p.add_argument("--data", default=None,
                   help="computer CSV (defaults to the config entry)")

    p = sub.add_parser("calibrate", help="estimate the parameters")
    common(p)
    p.add_argument("--eta", required=True, help="physical-surface artifact")
    p.add_argument("--p", required=True, help="emulator artifact")

    p = sub.add_parser("sobol", help="first-order sensitivity indices")
    common(p)
    p.add_argument("--p", required=True, help="emulator artifact")
    p.add_argument("--n-mc", type=int, default=4096,
                   help="Monte Carlo sample size")
    p.add_argument("--include-x", action="store_true",
                   help="also report indices for the control inputs")

    p = sub.add_parser("bench", help="run a synthetic replicate study")
    common(p, config=False)
    p.add_argument("--scenario", required=True,
                   choices=sorted(_SCENARIOS),
                   help="which study to run")
    p.add_argument("--n", type=int, default=None, help="physical sample size")
    p.add_argument("--N", type=int, default=None, help="computer sample size")
    p.add_argument("--replicates", type=int, default=None,
                   help="number of replicates")
    return ap


def _dispatch(args) -> int:
    if args.command == "bench":
        overrides = {"n_jobs": args.threads}
        for key in ("n", "N", "replicates"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        if args.seed is not None:
            overrides["seed"] = args.seed
        cmd_bench(args.scenario, out_dir=args.out, **overrides)
        return 0

    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    if args.command == "fit-physical":
        csv_path = args.data or cfg.physical_csv_path or cfg.physical_csv
        if csv_path is None:
            raise InputError("no physical CSV: pass --data or set "
                             "physical_csv in the config")
        cmd_fit_physical(cfg, csv_path, seed, out_dir=args.out)
    elif args.command == "fit-emulator":
        csv_path = args.data or cfg.computer_csv_path or cfg.computer_csv
        if csv_path is None:
            raise InputError("no computer CSV: pass --data or set "
                             "computer_csv in the config")
        cmd_fit_emulator(cfg, csv_path, seed, out_dir=args.out)
    elif args.command == "calibrate":
        cmd_calibrate(cfg, args.eta, args.p, seed, out_dir=args.out)
    elif args.command == "sobol":
        cmd_sobol(cfg, args.p, seed, out_dir=args.out, n_mc=args.n_mc,
                  include_x=args.include_x)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (BincalibError, OSError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
