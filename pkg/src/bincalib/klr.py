"""Penalized kernel logistic regression for the physical probability surface.

Maximizes the average Bernoulli log-likelihood minus a squared-RKHS-norm
penalty,

    (1/n) sum_i [y_i log g(xi_i) + (1-y_i) log(1-g(xi_i))] - lambda a'Ka,

over functions of the representer form xi(x) = b + sum_i a_i Phi(x_i, x)
with the intercept b unpenalized and g the logistic link. Solved by Newton
steps (iteratively re-weighted least squares) with step-halving.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import expit

from .datasets import PhysicalDataset
from .domains import Domain
from .errors import (ConvergenceWarning, DegenerateFoldWarning,
                     ExtrapolationWarning, InputError)
from .kernels import KernelSpec, cross, gram
from .rng import substream

MAX_ITER = 100
MAX_HALVINGS = 30
GRAD_TOL = 1e-8
CV_LOSS_CAP = -float(np.log(1e-3))


def _mean_loglik(y, f):
    # y log g + (1-y) log(1-g), stable via logaddexp
    s = 2.0 * y - 1.0
    return -np.mean(np.logaddexp(0.0, -s * f))


@dataclass(frozen=True)
class TrainLog:
    iterations: int
    converged: bool
    objective: float
    grad_norm: float
    objective_path: tuple
    fitted_latent: np.ndarray


@dataclass(frozen=True)
class KlrModel:
    """Fitted representer coefficients plus everything needed to predict."""

    spec: KernelSpec
    domain: Domain
    centers: np.ndarray  # training x scaled to the unit box
    a: np.ndarray
    b: float
    lam: float
    train_log: TrainLog

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    def latent(self, xs) -> np.ndarray:
        """xi(x) = b + sum_i a_i Phi(x_i, x) at raw inputs xs."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != self.domain.k:
            raise InputError(f"expected {self.domain.k} coordinates, got {xs.shape[1]}")
        u = self.domain.to_unit(xs)
        return self.b + cross(self.spec, u, self.centers) @ self.a


def _fit_core(K: np.ndarray, y: np.ndarray, lam: float, n: int):
    """Newton/IRLS on (a, b) given a precomputed Gram matrix."""
    a = np.zeros(n)
    ybar = float(np.mean(y))
    b = math.log(ybar / (1.0 - ybar))
    f = np.full(n, b)
    obj = _mean_loglik(y, f)  # penalty is zero at a = 0
    path = [obj]

    it = 0
    grad_norm = np.inf
    for it in range(1, MAX_ITER + 1):
        pi = expit(f)
        resid = (y - pi) / n
        grad_a = K @ resid - 2.0 * lam * (K @ a)
        grad_b = float(np.sum(resid))
        grad_norm = max(np.max(np.abs(grad_a)), abs(grad_b))
        if grad_norm <= GRAD_TOL:
            break

        w = np.clip(pi * (1.0 - pi), 1e-12, None)
        # negative Hessian blocks of the penalized objective
        KW = K * w[None, :]
        H = np.empty((n + 1, n + 1))
        H[:n, :n] = KW @ K / n + 2.0 * lam * K
        H[:n, n] = KW.sum(axis=1) / n
        H[n, :n] = H[:n, n]
        H[n, n] = w.sum() / n
        g = np.concatenate([grad_a, [grad_b]])

        ridge = 1e-12 * (np.trace(H) / (n + 1))
        step = None
        for _ in range(8):
            try:
                step = scipy.linalg.solve(H + ridge * np.eye(n + 1), g,
                                          assume_a="pos")
                break
            except scipy.linalg.LinAlgError:
                ridge *= 100.0
        if step is None:
            break

        # step-halving keeps the objective non-decreasing
        s = 1.0
        improved = False
        for _ in range(MAX_HALVINGS + 1):
            a_new = a + s * step[:n]
            b_new = b + s * step[n]
            f_new = K @ a_new + b_new
            obj_new = _mean_loglik(y, f_new) - lam * float(a_new @ (K @ a_new))
            if obj_new >= obj - 1e-14 * max(1.0, abs(obj)):
                improved = True
                break
            s *= 0.5
        if not improved:
            break
        a, b, f, obj = a_new, float(b_new), f_new, obj_new
        path.append(obj)

    converged = grad_norm <= GRAD_TOL
    return a, b, f, obj, grad_norm, it, converged, tuple(path)


def fit_klr(data: PhysicalDataset, spec: KernelSpec, lam: float) -> KlrModel:
    """Fit the penalized KLR estimate of the physical surface.

    Returns the model with converged=False and a ConvergenceWarning when the
    gradient tolerance is not met within the iteration cap.
    """
    if lam <= 0:
        raise InputError(f"penalty must be positive, got {lam}")
    X = data.x_unit
    K = gram(spec, X).entries
    a, b, f, obj, grad_norm, it, converged, path = _fit_core(K, data.y.astype(float),
                                                             lam, data.n)
    if not converged:
        warnings.warn(f"IRLS stopped after {it} iterations with gradient "
                      f"sup-norm {grad_norm:.2e}", ConvergenceWarning)
    log = TrainLog(iterations=it, converged=converged, objective=obj,
                   grad_norm=grad_norm, objective_path=path, fitted_latent=f)
    return KlrModel(spec=spec, domain=data.domain, centers=X, a=a, b=b,
                    lam=float(lam), train_log=log)


def predict_eta(model: KlrModel, xs) -> np.ndarray:
    """g(xi(x)) per row of xs (raw units); warns on extrapolation."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if not np.all(model.domain.contains(xs)):
        warnings.warn("prediction outside the training domain", ExtrapolationWarning)
    return expit(model.latent(xs))


def default_rho_grid() -> tuple:
    return (0.25, 0.5, 1.0, 2.0)


def default_lambda_grid(n: int, d: int, nu: float = 2.5, num: int = 7,
                        decades: float = 2.5) -> np.ndarray:
    """Log-spaced penalty grid centered at the rate heuristic n^(-2m/(2m+d)).

    m = nu + d/2 is the RKHS smoothness; the heuristic balances the
    estimation and approximation errors, so the grid brackets it.
    """
    m = nu + d / 2.0
    center = float(n) ** (-2.0 * m / (2.0 * m + d))
    return np.geomspace(center * 10.0 ** (-decades), center * 10.0 ** decades, num)


def stratified_folds(y: np.ndarray, folds: int, rng) -> np.ndarray:
    """Fold ids balanced within each label class; deterministic given rng."""
    ids = np.empty(y.shape[0], dtype=int)
    for label in (0, 1):
        idx = np.nonzero(y == label)[0]
        perm = rng.permutation(idx)
        ids[perm] = np.arange(perm.size) % folds
    return ids


def cv_tune_klr(data: PhysicalDataset, rho_grid=None, lambda_grid=None,
                folds: int = 10, seed: int = 0, nu: float = 2.5):
    """Pick (rho, lambda) minimizing held-out log-loss over a grid.

    Loss is pooled over all held-out points. Ties break toward the smallest
    lambda, then the smallest rho. Returns (KernelSpec, lambda).
    """
    if folds < 2:
        raise InputError(f"need folds >= 2, got {folds}")
    rho_grid = tuple(rho_grid) if rho_grid is not None else default_rho_grid()
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(data.n, data.d, nu=nu)
    lambda_grid = tuple(float(v) for v in lambda_grid)
    if not rho_grid or not lambda_grid:
        raise InputError("grids must be nonempty")

    y = data.y.astype(float)
    X = data.x_unit
    fold_ids = stratified_folds(data.y, folds, substream(seed, "cv"))

    # loss[i_rho][i_lam] accumulates (sum of log-losses, count)
    loss_sum = np.zeros((len(rho_grid), len(lambda_grid)))
    loss_cnt = np.zeros_like(loss_sum)
    used_any = False
    for i_rho, rho in enumerate(rho_grid):
        spec = KernelSpec.matern(nu=nu, rho=float(rho))
        K = gram(spec, X).entries
        for fold in range(folds):
            test = fold_ids == fold
            train = ~test
            if not np.any(test):
                continue
            y_tr = y[train]
            if y_tr.min() == y_tr.max():
                warnings.warn(f"fold {fold} skipped: single-class training split",
                              DegenerateFoldWarning)
                continue
            K_tr = K[np.ix_(train, train)]
            K_te = K[np.ix_(test, train)]
            n_tr = int(train.sum())
            for i_lam, lam in enumerate(lambda_grid):
                a, b, _f, _obj, _gn, _it, _conv, _path = _fit_core(
                    K_tr, y_tr, lam, n_tr)
                f_te = K_te @ a + b
                s = 2.0 * y[test] - 1.0
                # cap = probability floor of 1e-3, so one confidently wrong
                # point cannot dominate a fold mean
                ll = np.minimum(np.logaddexp(0.0, -s * f_te), CV_LOSS_CAP)
                loss_sum[i_rho, i_lam] += float(np.sum(ll))
                loss_cnt[i_rho, i_lam] += int(test.sum())
                used_any = True
    if not used_any:
        raise InputError("all cross-validation folds were degenerate")

    mean_loss = loss_sum / np.maximum(loss_cnt, 1)
    best = None
    for i_lam, lam in enumerate(lambda_grid):
        for i_rho, rho in enumerate(rho_grid):
            key = (mean_loss[i_rho, i_lam], lam, rho)
            if best is None or key < best[0]:
                best = (key, i_rho, i_lam)
    _, i_rho, i_lam = best
    return KernelSpec.matern(nu=nu, rho=float(rho_grid[i_rho])), float(lambda_grid[i_lam])
