"""Input domains and the scaling applied before every kernel evaluation.

All coordinates are affinely mapped to the unit box before distances are
computed, so one scalar length-scale is meaningful across dimensions and
the integration volume is 1 in scaled coordinates. Coordinates spanning
several decades can opt into a log10 transform ahead of the affine map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

_LN10 = np.log(10.0)


@dataclass(frozen=True)
class Domain:
    """A box domain with per-coordinate names and optional log scaling.

    bounds: (k, 2) array of (lo, hi) in raw units.
    names: coordinate names (defaults to x1..xk).
    log10: per-coordinate flag; True transforms by log10 before the affine
        map to [0, 1] (requires lo > 0).
    """

    bounds: np.ndarray
    names: tuple = ()
    log10: tuple = ()

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise InputError(f"bounds must be (k, 2), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise InputError("bounds must be finite")
        if np.any(b[:, 0] >= b[:, 1]):
            bad = np.nonzero(b[:, 0] >= b[:, 1])[0].tolist()
            raise InputError(f"need lo < hi in every coordinate; violated at {bad}")
        object.__setattr__(self, "bounds", b)
        k = b.shape[0]
        names = tuple(self.names) if self.names else tuple(f"x{i+1}" for i in range(k))
        logf = tuple(bool(v) for v in self.log10) if self.log10 else (False,) * k
        if len(names) != k or len(logf) != k:
            raise InputError("names/log10 length must match bounds")
        for i, flag in enumerate(logf):
            if flag and b[i, 0] <= 0:
                raise InputError(f"log10 scaling needs lo > 0 in coordinate {i}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "log10", logf)

    @property
    def k(self) -> int:
        return self.bounds.shape[0]

    def _transformed_bounds(self):
        b = self.bounds.copy()
        for i, flag in enumerate(self.log10):
            if flag:
                b[i] = np.log10(b[i])
        return b

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Map raw coordinates (m, k) or (k,) into the unit box."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.k:
            raise InputError(f"expected {self.k} coordinates, got {x.shape[1]}")
        t = x.copy()
        for i, flag in enumerate(self.log10):
            if flag:
                t[:, i] = np.log10(t[:, i])
        tb = self._transformed_bounds()
        return (t - tb[:, 0]) / (tb[:, 1] - tb[:, 0])

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        """Inverse of to_unit."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[1] != self.k:
            raise InputError(f"expected {self.k} coordinates, got {u.shape[1]}")
        tb = self._transformed_bounds()
        t = tb[:, 0] + u * (tb[:, 1] - tb[:, 0])
        x = t.copy()
        for i, flag in enumerate(self.log10):
            if flag:
                x[:, i] = 10.0 ** x[:, i]
        return x

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Row mask: inside the box up to tol in scaled units."""
        u = self.to_unit(x)
        return np.all((u >= -tol) & (u <= 1.0 + tol), axis=1)

    def jacobian_from_unit(self, x_raw: np.ndarray) -> np.ndarray:
        """diag of d(raw)/d(unit) at a raw point; delta-method factor for SEs."""
        x_raw = np.asarray(x_raw, dtype=float).ravel()
        tb = self._transformed_bounds()
        width = tb[:, 1] - tb[:, 0]
        jac = width.copy()
        for i, flag in enumerate(self.log10):
            if flag:
                jac[i] = width[i] * x_raw[i] * _LN10
        return jac

    def join(self, other: "Domain") -> "Domain":
        """Concatenate two domains (control inputs followed by parameters)."""
        return Domain(
            bounds=np.vstack([self.bounds, other.bounds]),
            names=self.names + other.names,
            log10=self.log10 + other.log10,
        )


def unit_domain(k: int, names: tuple = ()) -> Domain:
    return Domain(bounds=np.tile([0.0, 1.0], (k, 1)), names=names)
