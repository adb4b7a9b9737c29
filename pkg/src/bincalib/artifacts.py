"""Model persistence: versioned JSON artifacts for fitted models.

The surface classifier artifact stores its representer coefficients
verbatim. The emulator artifact stores the posterior mode and training
data and recomputes the prediction factors (likelihood gradient, weight
roots, Cholesky factor) on load, which keeps files small and guarantees
the factors are consistent with the stored mode. Round-tripped models
predict identically to the originals (floats are serialized exactly).
"""

import json

import numpy as np
from scipy.special import expit

from .domains import Domain
from .errors import InputError
from .gpc import GpcModel, GpcTrainLog
from .kernels import KernelSpec, gram
from .klr import KlrModel, TrainLog

FORMAT_VERSION = 1

__all__ = ["save_model", "load_model", "FORMAT_VERSION"]


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def _spec_out(spec: KernelSpec) -> dict:
    return {"family": spec.family, "nu": spec.nu, "rho": spec.rho,
            "phi": spec.phi}


def _spec_in(obj) -> KernelSpec:
    return KernelSpec(family=obj["family"], nu=obj["nu"], rho=obj["rho"],
                      phi=obj["phi"])


def _domain_out(dom: Domain) -> dict:
    return {"bounds": _arr(dom.bounds), "names": list(dom.names),
            "log10": [bool(v) for v in dom.log10]}


def _domain_in(obj) -> Domain:
    return Domain(bounds=np.array(obj["bounds"], dtype=float),
                  names=tuple(obj["names"]),
                  log10=tuple(bool(v) for v in obj["log10"]))


def save_model(model, path) -> None:
    """Serialize a fitted model to versioned JSON."""
    if isinstance(model, KlrModel):
        body = {
            "format_version": FORMAT_VERSION,
            "kind": "klr",
            "spec": _spec_out(model.spec),
            "domain": _domain_out(model.domain),
            "centers": _arr(model.centers),
            "a": _arr(model.a),
            "b": float(model.b),
            "lam": float(model.lam),
            "train_log": {
                "iterations": model.train_log.iterations,
                "converged": bool(model.train_log.converged),
                "objective": float(model.train_log.objective),
                "grad_norm": float(model.train_log.grad_norm),
                "objective_path": _arr(model.train_log.objective_path),
                "fitted_latent": _arr(model.train_log.fitted_latent),
            },
        }
    elif isinstance(model, GpcModel):
        body = {
            "format_version": FORMAT_VERSION,
            "kind": "gpc",
            "spec": _spec_out(model.spec),
            "domain_x": _domain_out(model.domain_x),
            "domain_theta": _domain_out(model.domain_theta),
            "train_points": _arr(model.train_points),
            "y": _arr(model.y),
            "f_hat": _arr(model.f_hat),
            "jitter": float(model.jitter),
            "train_log": {
                "iterations": model.train_log.iterations,
                "converged": bool(model.train_log.converged),
                "objective": float(model.train_log.objective),
                "residual": float(model.train_log.residual),
                "objective_path": _arr(model.train_log.objective_path),
            },
        }
    else:
        raise InputError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        json.dump(body, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Load a model artifact; returns the same type that was saved."""
    try:
        with open(path) as fh:
            body = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(body, dict) or "kind" not in body:
        raise InputError(f"{path}: not a model artifact")
    version = body.get("format_version")
    if version != FORMAT_VERSION:
        raise InputError(f"{path}: format version {version} not supported "
                         f"(expected {FORMAT_VERSION})")

    if body["kind"] == "klr":
        log = body["train_log"]
        return KlrModel(
            spec=_spec_in(body["spec"]),
            domain=_domain_in(body["domain"]),
            centers=np.array(body["centers"], dtype=float),
            a=np.array(body["a"], dtype=float),
            b=float(body["b"]),
            lam=float(body["lam"]),
            train_log=TrainLog(
                iterations=int(log["iterations"]),
                converged=bool(log["converged"]),
                objective=float(log["objective"]),
                grad_norm=float(log["grad_norm"]),
                objective_path=tuple(log["objective_path"]),
                fitted_latent=np.array(log["fitted_latent"], dtype=float)),
        )
    if body["kind"] == "gpc":
        spec = _spec_in(body["spec"])
        Z = np.array(body["train_points"], dtype=float)
        y = np.array(body["y"], dtype=float)
        f = np.array(body["f_hat"], dtype=float)
        jitter = float(body["jitter"])
        pi = expit(f)
        sw = np.sqrt(np.clip(pi * (1.0 - pi), 1e-12, None))
        K = gram(spec, Z, jitter=jitter).entries
        B = np.eye(len(y)) + (sw[:, None] * K) * sw[None, :]
        L = np.linalg.cholesky(B)
        log = body["train_log"]
        return GpcModel(
            spec=spec,
            domain_x=_domain_in(body["domain_x"]),
            domain_theta=_domain_in(body["domain_theta"]),
            train_points=Z, y=y, f_hat=f, grad_lik=y - pi, sqrt_w=sw, L=L,
            jitter=jitter,
            train_log=GpcTrainLog(
                iterations=int(log["iterations"]),
                converged=bool(log["converged"]),
                objective=float(log["objective"]),
                residual=float(log["residual"]),
                objective_path=tuple(log["objective_path"])),
        )
    raise InputError(f"{path}: unknown artifact kind {body['kind']!r}")
