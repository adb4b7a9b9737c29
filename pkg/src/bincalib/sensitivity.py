"""First-order Sobol sensitivity of an emulated surface.

Pick-freeze Monte Carlo with the Jansen variance form: two independent
input matrices A and B are drawn uniformly over the scaled joint domain,
and for each input of interest the estimator compares f(B) against f at
B with that one column replaced by A's. Indices are reported for the
calibration components by default; control-input components are
available behind a flag. Confidence intervals resample pick-freeze rows.
"""

from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .errors import InputError, NumericalError
from .rng import substream

MIN_VARIANCE = 1e-10

__all__ = ["SobolResult", "sobol_first_order", "MIN_VARIANCE"]


@dataclass(frozen=True)
class SobolResult:
    """First-order indices with bootstrap intervals, one per input."""

    indices: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    n_mc: int
    n_boot: int
    names: tuple


def _jansen(f_a: np.ndarray, f_sub: np.ndarray, var: float) -> float:
    # f(A) and f(B with column i from A) share only input i, so
    # E[(f_a - f_sub)^2] / 2 = Var - Var(E[f|X_i])
    return 1.0 - float(np.mean((f_a - f_sub) ** 2)) / (2.0 * var)


def sobol_first_order(p, domain_x: Domain, domain_theta: Domain,
                      n_mc: int = 4096, n_boot: int = 200, seed: int = 0,
                      include_x: bool = False) -> SobolResult:
    """First-order Sobol indices of p(x, theta) over the joint domain.

    p maps (x rows, theta rows) to one value per row; pass domain_x=None
    for a pure parameter function (x is then an empty block). Total
    variance below MIN_VARIANCE raises, since indices of a constant
    surface are undefined.
    """
    if n_mc < 1000:
        raise InputError(f"need n_mc >= 1000, got {n_mc}")
    if n_boot < 0:
        raise InputError(f"need n_boot >= 0, got {n_boot}")
    d = 0 if domain_x is None else domain_x.k
    q = domain_theta.k

    rng = substream(seed, "design")
    A = rng.uniform(size=(n_mc, d + q))
    B = rng.uniform(size=(n_mc, d + q))

    def evaluate(u):
        xs = (domain_x.from_unit(u[:, :d]) if d
              else np.empty((u.shape[0], 0)))
        ths = domain_theta.from_unit(u[:, d:])
        vals = np.asarray(p(xs, ths), dtype=float).reshape(-1)
        if vals.shape[0] != u.shape[0]:
            raise InputError(
                f"p gives {vals.shape[0]} values for {u.shape[0]} rows")
        return vals

    f_a = evaluate(A)
    f_b = evaluate(B)
    var = float(np.var(np.concatenate([f_a, f_b])))
    if not np.isfinite(var):
        raise NumericalError("surface evaluations are not finite")
    if var < MIN_VARIANCE:
        raise NumericalError(
            f"constant surface: total variance {var:.2e} below {MIN_VARIANCE}")

    cols = list(range(d, d + q)) + (list(range(d)) if include_x else [])
    # a domain built without names carries the generic x1..xk labels,
    # which would mislabel parameters; substitute theta_i there
    default = tuple(f"x{i + 1}" for i in range(q))
    theta_names = (tuple(f"theta_{i + 1}" for i in range(q))
                   if domain_theta.names == default else domain_theta.names)
    names = theta_names + (tuple(domain_x.names) if include_x else ())
    f_subs = []
    for c in cols:
        Bc = B.copy()
        Bc[:, c] = A[:, c]
        f_subs.append(evaluate(Bc))

    point = np.array([_jansen(f_a, fs, var) for fs in f_subs])

    if n_boot:
        boot_rng = substream(seed, "bootstrap")
        samples = np.empty((n_boot, len(cols)))
        for b in range(n_boot):
            idx = boot_rng.integers(0, n_mc, size=n_mc)
            v = float(np.var(np.concatenate([f_a[idx], f_b[idx]])))
            v = max(v, MIN_VARIANCE)
            samples[b] = [_jansen(f_a[idx], fs[idx], v) for fs in f_subs]
        lo = np.percentile(samples, 2.5, axis=0)
        hi = np.percentile(samples, 97.5, axis=0)
        # percentile intervals can exclude the point estimate in skewed
        # corners; widen so the invariant holds
        lo = np.minimum(lo, point)
        hi = np.maximum(hi, point)
    else:
        lo = point.copy()
        hi = point.copy()

    return SobolResult(indices=point, ci_lo=lo, ci_hi=hi,
                       n_mc=int(n_mc), n_boot=int(n_boot), names=names)
