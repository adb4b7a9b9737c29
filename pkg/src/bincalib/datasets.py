"""Dataset containers for physical and computer experiments.

Both carry their domains so scaled coordinates are always derived the same
way; validation happens at construction so downstream code can assume the
invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .errors import InputError


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise InputError(f"labels must be 1-D, got shape {y.shape}")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise InputError(f"labels must be in {{0, 1}}, found {vals}")
    if vals.size < 2:
        raise InputError("labels are all identical; need both classes present")
    return y.astype(np.int8)


def _check_inside(x, domain, what):
    inside = domain.contains(x)
    if not np.all(inside):
        bad = np.nonzero(~inside)[0]
        head = bad[:10].tolist()
        raise InputError(f"{what} rows outside the domain at indices {head}"
                         + ("..." if bad.size > 10 else ""))


@dataclass(frozen=True)
class PhysicalDataset:
    """Binary observations of the physical process over control inputs x."""

    x: np.ndarray
    y: np.ndarray
    domain: Domain

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise InputError("x contains non-finite values")
        if x.shape[1] != self.domain.k:
            raise InputError(f"x has {x.shape[1]} columns, domain has {self.domain.k}")
        y = _check_labels(self.y)
        if y.shape[0] != x.shape[0]:
            raise InputError("x and y lengths differ")
        if x.shape[0] < x.shape[1] + 1:
            raise InputError(f"need n >= d+1 rows, got n={x.shape[0]}, d={x.shape[1]}")
        _check_inside(x, self.domain, "physical x")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def x_unit(self) -> np.ndarray:
        return self.domain.to_unit(self.x)


@dataclass(frozen=True)
class ComputerDataset:
    """Binary simulation outputs over joint (x, theta) inputs."""

    x: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    domain_x: Domain
    domain_theta: Domain

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(th))):
            raise InputError("inputs contain non-finite values")
        if x.shape[1] != self.domain_x.k:
            raise InputError(f"x has {x.shape[1]} columns, domain has {self.domain_x.k}")
        if th.shape[1] != self.domain_theta.k:
            raise InputError(f"theta has {th.shape[1]} columns, domain has {self.domain_theta.k}")
        if x.shape[0] != th.shape[0]:
            raise InputError("x and theta row counts differ")
        y = _check_labels(self.y)
        if y.shape[0] != x.shape[0]:
            raise InputError("inputs and y lengths differ")
        _check_inside(x, self.domain_x, "computer x")
        _check_inside(th, self.domain_theta, "computer theta")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.theta.shape[1]

    @property
    def xt_unit(self) -> np.ndarray:
        """Joint (x, theta) rows scaled to the unit box."""
        return np.hstack([self.domain_x.to_unit(self.x),
                          self.domain_theta.to_unit(self.theta)])
