"""Positive-definite kernels and Gram-matrix construction.

Two families, both normalized so the value at zero distance is 1:

  Matern(nu, rho):  Phi(d) = (2^(1-nu)/Gamma(nu)) * t^nu * K_nu(t),
                    t = 2*sqrt(nu)*d/rho, with closed forms for nu = 1.5
                    and 2.5 and a small-argument series fallback otherwise.
  RBF(phi):         Phi(d) = exp(-phi * d^2).

Distances are Euclidean over inputs already scaled to the unit box (see
domains). Cross-matrix evaluation dispatches to a compiled extension when
it is importable, with a NumPy fallback that produces the same values; use
backend() to see which one is active. Set BINCALIB_FORCE_NUMPY=1 before
import to skip the extension.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma as _gamma
from scipy.special import kv as _besselk

from .errors import InputError, NumericalError

if os.environ.get("BINCALIB_FORCE_NUMPY"):
    _fast = None
else:
    try:
        from . import _fastkern as _fast
    except ImportError:
        _fast = None

_BACKEND = "compiled" if _fast is not None else "numpy"


def backend() -> str:
    """Active cross-matrix backend: 'compiled' or 'numpy'."""
    return _BACKEND


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its scalar hyperparameters.

    family: 'matern' (uses nu, rho) or 'rbf' (uses phi).
    """

    family: str
    nu: Optional[float] = None
    rho: Optional[float] = None
    phi: Optional[float] = None

    def __post_init__(self):
        if self.family == "matern":
            if self.nu is None or self.rho is None:
                raise InputError("matern requires nu and rho")
            if self.nu < 1:
                raise InputError(f"matern smoothness must satisfy nu >= 1, got {self.nu}")
            if self.rho <= 0:
                raise InputError(f"matern length-scale must be positive, got {self.rho}")
        elif self.family == "rbf":
            if self.phi is None:
                raise InputError("rbf requires phi")
            if self.phi <= 0:
                raise InputError(f"rbf inverse-square length must be positive, got {self.phi}")
        else:
            raise InputError(f"unknown kernel family {self.family!r}")

    @staticmethod
    def matern(nu: float, rho: float) -> "KernelSpec":
        return KernelSpec(family="matern", nu=nu, rho=rho)

    @staticmethod
    def rbf(phi: float) -> "KernelSpec":
        return KernelSpec(family="rbf", phi=phi)


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix with the jitter that was added to its diagonal."""

    entries: np.ndarray
    jitter: float


def _matern_general(dist: np.ndarray, nu: float, rho: float) -> np.ndarray:
    """Bessel-form Matern, series-safe near zero distance.

    t^nu * K_nu(t) -> Gamma(nu) * 2^(nu-1) as t -> 0, so values below
    t/(2 sqrt(nu)) = 1e-8 (i.e. d/rho < 1e-8) are set to the limit 1.
    """
    t = (2.0 * math.sqrt(nu) / rho) * dist
    out = np.ones_like(t)
    big = t >= 2.0 * math.sqrt(nu) * 1e-8
    tb = t[big]
    out[big] = (2.0 ** (1.0 - nu) / _gamma(nu)) * (tb ** nu) * _besselk(nu, tb)
    return out


def _cross_numpy(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if spec.family == "rbf":
        d2 = cdist(a, b, "sqeuclidean")
        return np.exp(-spec.phi * d2)
    dist = cdist(a, b, "euclidean")
    if spec.nu == 1.5:
        t = (math.sqrt(6.0) / spec.rho) * dist
        return (1.0 + t) * np.exp(-t)
    if spec.nu == 2.5:
        t = (math.sqrt(10.0) / spec.rho) * dist
        return (1.0 + t + t * t / 3.0) * np.exp(-t)
    return _matern_general(dist, spec.nu, spec.rho)


def cross(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix K[i, j] = Phi(a_i, b_j) for scaled row sets a, b."""
    a = np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=float)))
    b = np.ascontiguousarray(np.atleast_2d(np.asarray(b, dtype=float)))
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if _fast is not None:
        if spec.family == "rbf":
            return _fast.rbf_cross(a, b, spec.phi)
        if spec.nu == 1.5:
            return _fast.matern15_cross(a, b, spec.rho)
        if spec.nu == 2.5:
            return _fast.matern25_cross(a, b, spec.rho)
    return _cross_numpy(spec, a, b)


def eval_kernel(spec: KernelSpec, a, b) -> float:
    """Phi(a, b) for two single points; symmetric in (a, b), in (0, 1]."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(cross(spec, a[None, :], b[None, :])[0, 0])


def gram(spec: KernelSpec, points: np.ndarray, jitter: float = 0.0) -> GramMatrix:
    """Kernel matrix over one point set, plus jitter on the diagonal."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise InputError("points must be nonempty")
    if not np.all(np.isfinite(points)):
        raise InputError("points contain non-finite coordinates")
    if jitter < 0:
        raise InputError("jitter must be nonnegative")
    entries = cross(spec, points, points)
    if jitter:
        entries = entries + jitter * np.eye(points.shape[0])
    return GramMatrix(entries=entries, jitter=float(jitter))


def safe_cholesky(mat: np.ndarray, start_jitter: float = 1e-10,
                  max_jitter: float = 1e-4):
    """Lower Cholesky factor with escalating diagonal jitter.

    Tries the matrix as given, then adds jitter starting at start_jitter
    and multiplying by 10 up to max_jitter. Returns (L, jitter_used).
    Raises NumericalError carrying the final jitter tried.
    """
    try:
        return np.linalg.cholesky(mat), 0.0
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(mat.shape[0])
    jitter = start_jitter
    while jitter <= max_jitter * (1 + 1e-12):
        try:
            return np.linalg.cholesky(mat + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"Cholesky failed after jitter escalation up to {max_jitter:g}",
        jitter=max_jitter,
    )
