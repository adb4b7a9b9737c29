"""Asymptotic uncertainty for calibration estimates.

The estimator's limiting covariance is the sandwich 4 V^-1 W V^-1 / n,
where V is the expected theta-Hessian of the squared surface gap and
W weights the emulator's theta-gradient outer products by the Bernoulli
variance of the physical surface. Both are Monte Carlo averages over the
calibration quadrature nodes, with derivatives taken by central finite
differences in scaled coordinates.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .domains import Domain, unit_domain
from .errors import BoundaryWarning, InputError, NumericalError

V_STEP = 1e-3
W_STEP = 1e-4
COND_LIMIT = 1e10

__all__ = ["AsymptoticReport", "estimate_V", "estimate_W", "sandwich",
           "V_STEP", "W_STEP", "COND_LIMIT"]


@dataclass(frozen=True)
class AsymptoticReport:
    """Sandwich covariance summary for one calibration estimate."""

    V_hat: np.ndarray
    W_hat: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    cond_V: float
    mode: str


def _eta_values(eta, quad: np.ndarray) -> np.ndarray:
    """Physical-surface values at the quadrature nodes."""
    vals = eta(quad) if callable(eta) else eta
    vals = np.asarray(vals, dtype=float).reshape(-1)
    if vals.shape[0] != quad.shape[0]:
        raise InputError(
            f"eta gives {vals.shape[0]} values for {quad.shape[0]} nodes")
    if not np.all(np.isfinite(vals)):
        raise NumericalError("eta values are not finite")
    return vals


def _surface(p, quad: np.ndarray, theta: np.ndarray) -> np.ndarray:
    vals = np.asarray(p(quad, theta), dtype=float).reshape(-1)
    if vals.shape[0] != quad.shape[0]:
        raise InputError(
            f"p gives {vals.shape[0]} values for {quad.shape[0]} nodes")
    return vals


def _setup(theta_hat, domain_theta):
    theta = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    box = domain_theta if domain_theta is not None else unit_domain(theta.size)
    if not isinstance(box, Domain):
        box = Domain(np.asarray(box, dtype=float))
    if box.k != theta.size:
        raise InputError(f"theta has {theta.size} components, box has {box.k}")
    u0 = box.to_unit(theta[None, :])[0]
    return theta, box, u0


def estimate_V(eta, p, theta_hat, quad, domain_theta: Domain = None,
               step: float = V_STEP) -> np.ndarray:
    """Monte Carlo theta-Hessian of the squared surface gap at theta_hat.

    eta is either an array of physical-surface values at the quad nodes or
    a callable over them; p is a callable p(nodes, theta). Second central
    differences with the given step in scaled coordinates; the result is
    symmetrized. Averages use numpy's pairwise summation, so the node
    order fixes the result bitwise.
    """
    quad = np.atleast_2d(np.asarray(quad, dtype=float))
    theta, box, u0 = _setup(theta_hat, domain_theta)
    eta_v = _eta_values(eta, quad)
    q = theta.size

    def F(u):
        gap = eta_v - _surface(p, quad, box.from_unit(u[None, :])[0])
        return float(np.mean(gap * gap))

    f0 = F(u0)
    V = np.empty((q, q))
    for i in range(q):
        ei = np.zeros(q)
        ei[i] = step
        V[i, i] = (F(u0 + ei) - 2.0 * f0 + F(u0 - ei)) / step ** 2
        for j in range(i + 1, q):
            ej = np.zeros(q)
            ej[j] = step
            V[i, j] = (F(u0 + ei + ej) - F(u0 + ei - ej)
                       - F(u0 - ei + ej) + F(u0 - ei - ej)) / (4.0 * step ** 2)
            V[j, i] = V[i, j]
    if not np.all(np.isfinite(V)):
        raise NumericalError("non-finite second differences in V")
    return 0.5 * (V + V.T)


def estimate_W(eta, p, theta_hat, quad, domain_theta: Domain = None,
               step: float = W_STEP) -> np.ndarray:
    """Monte Carlo average of eta(1-eta) times gradient outer products.

    Per-node central differences of p in scaled theta coordinates; the
    Bernoulli variance of the physical surface weights each node. The
    average of outer products with nonnegative weights makes the result
    symmetric positive semidefinite by construction.
    """
    quad = np.atleast_2d(np.asarray(quad, dtype=float))
    theta, box, u0 = _setup(theta_hat, domain_theta)
    eta_v = _eta_values(eta, quad)
    q = theta.size
    M = quad.shape[0]

    G = np.empty((M, q))
    for i in range(q):
        ei = np.zeros(q)
        ei[i] = step
        hi = _surface(p, quad, box.from_unit((u0 + ei)[None, :])[0])
        lo = _surface(p, quad, box.from_unit((u0 - ei)[None, :])[0])
        G[:, i] = (hi - lo) / (2.0 * step)
    if not np.all(np.isfinite(G)):
        raise NumericalError("non-finite gradient differences in W")
    w = eta_v * (1.0 - eta_v)
    W = (G * w[:, None]).T @ G / M
    return 0.5 * (W + W.T)


def sandwich(V: np.ndarray, W: np.ndarray, n: int, mode: str = "plugin",
             jacobian=None, boundary: bool = False) -> AsymptoticReport:
    """Assemble the sandwich covariance 4 V^-1 W V^-1 / n.

    jacobian, when given, is the diagonal of the scaled-to-raw coordinate
    map at theta_hat; the covariance is mapped to raw units by the delta
    method. boundary=True keeps the report but warns that the asymptotics
    assume an interior optimum.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if V.shape != W.shape or V.shape[0] != V.shape[1]:
        raise InputError(f"V {V.shape} and W {W.shape} must be square and equal")
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    if mode not in ("plugin", "oracle"):
        raise InputError(f"mode must be 'plugin' or 'oracle', got {mode!r}")

    eigs = np.linalg.eigvalsh(W)
    if eigs.min() < -1e-8 * max(np.trace(W), 1e-300):
        raise NumericalError(f"W is not PSD: min eigenvalue {eigs.min():.3e}")

    cond_V = float(np.linalg.cond(V))
    if not np.isfinite(cond_V) or cond_V >= COND_LIMIT:
        raise NumericalError(
            f"V is numerically singular (condition number {cond_V:.2e}); "
            "use oracle mode or a larger quadrature")

    Vi = np.linalg.inv(V)
    cov = 4.0 * Vi @ W @ Vi / n
    cov = 0.5 * (cov + cov.T)
    if jacobian is not None:
        J = np.asarray(jacobian, dtype=float).reshape(-1)
        if J.size != V.shape[0]:
            raise InputError(
                f"jacobian has {J.size} entries for {V.shape[0]} parameters")
        cov = cov * np.outer(J, J)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    if boundary:
        warnings.warn("estimate sits on the parameter boundary; the "
                      "sandwich assumes an interior optimum", BoundaryWarning)
    return AsymptoticReport(V_hat=V, W_hat=W, cov=cov, se=se,
                            cond_V=cond_V, mode=mode)
