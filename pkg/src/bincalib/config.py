"""Run configuration: domains, tuning grids, seeds, and file paths.

A config is a plain JSON document; loading validates every field, builds
the control and parameter domains (with optional per-coordinate log10
scaling for multi-decade ranges), and checks that referenced data files
exist. The canonical SHA-256 hash of the validated content is stamped
into every output file so results can be traced back to their exact
settings.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

from .domains import Domain
from .errors import InputError

DEFAULT_RHO_GRID = (0.25, 0.5, 1.0, 2.0)
DEFAULT_PHI_GRID = (3.0, 9.0, 21.0, 50.0, 120.0)

__all__ = ["CoordSpec", "RunConfig", "load_config", "DEFAULT_RHO_GRID",
           "DEFAULT_PHI_GRID"]


@dataclass(frozen=True)
class CoordSpec:
    """One coordinate: name, raw range, units, optional log10 scaling."""

    name: str
    lo: float
    hi: float
    units: str = ""
    log10: bool = False

    def __post_init__(self):
        if not self.name:
            raise InputError("coordinate name must be nonempty")
        if not (self.lo < self.hi):
            raise InputError(
                f"coordinate {self.name!r}: need lo < hi, got "
                f"[{self.lo}, {self.hi}]")
        if self.log10 and self.lo <= 0:
            raise InputError(
                f"coordinate {self.name!r}: log10 scaling needs lo > 0")


def _domain(coords) -> Domain:
    return Domain(bounds=[[c.lo, c.hi] for c in coords],
                  names=tuple(c.name for c in coords),
                  log10=tuple(c.log10 for c in coords))


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for every pipeline command."""

    controls: tuple
    parameters: tuple
    rho_grid: tuple = DEFAULT_RHO_GRID
    lambda_grid: tuple | None = None
    phi_grid: tuple = DEFAULT_PHI_GRID
    folds: int = 10
    quadrature_m: int = 10000
    n_starts: int = 1
    seed: int = 0
    physical_csv: str | None = None
    computer_csv: str | None = None
    # absolute locations filled in by load_config; the hash covers the
    # paths as written so moving a config tree does not change it
    physical_csv_path: str | None = None
    computer_csv_path: str | None = None

    def __post_init__(self):
        if not self.controls or not self.parameters:
            raise InputError("need at least one control and one parameter")
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        for label, grid in (("rho_grid", self.rho_grid),
                            ("phi_grid", self.phi_grid)):
            vals = tuple(float(v) for v in grid)
            if not vals or any(v <= 0 for v in vals):
                raise InputError(f"{label} must be nonempty and positive")
            object.__setattr__(self, label, vals)
        if self.lambda_grid is not None:
            vals = tuple(float(v) for v in self.lambda_grid)
            if not vals or any(v <= 0 for v in vals):
                raise InputError("lambda_grid must be nonempty and positive")
            object.__setattr__(self, "lambda_grid", vals)
        if self.folds < 2:
            raise InputError(f"need folds >= 2, got {self.folds}")
        if self.quadrature_m < 1:
            raise InputError("quadrature_m must be positive")
        if self.n_starts < 1:
            raise InputError("n_starts must be positive")
        names = [c.name for c in self.controls + self.parameters]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate coordinate names in {names}")
        self.domain_x()
        self.domain_theta()

    def domain_x(self) -> Domain:
        return _domain(self.controls)

    def domain_theta(self) -> Domain:
        return _domain(self.parameters)

    def canonical(self) -> dict:
        def coord(c):
            return {"name": c.name, "lo": float(c.lo), "hi": float(c.hi),
                    "units": c.units, "log10": bool(c.log10)}

        return {
            "controls": [coord(c) for c in self.controls],
            "parameters": [coord(c) for c in self.parameters],
            "rho_grid": list(self.rho_grid),
            "lambda_grid": (None if self.lambda_grid is None
                            else list(self.lambda_grid)),
            "phi_grid": list(self.phi_grid),
            "folds": int(self.folds),
            "quadrature_m": int(self.quadrature_m),
            "n_starts": int(self.n_starts),
            "seed": int(self.seed),
            "physical_csv": self.physical_csv,
            "computer_csv": self.computer_csv,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.canonical(), fh, indent=1, sort_keys=True)
            fh.write("\n")


_COORD_KEYS = {"name", "lo", "hi", "units", "log10"}
_TOP_KEYS = {"controls", "parameters", "rho_grid", "lambda_grid", "phi_grid",
             "folds", "quadrature_m", "n_starts", "seed", "physical_csv",
             "computer_csv"}


def _coord_from(obj, where) -> CoordSpec:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: each coordinate must be an object")
    unknown = set(obj) - _COORD_KEYS
    if unknown:
        raise InputError(f"{where}: unknown keys {sorted(unknown)}")
    for key in ("name", "lo", "hi"):
        if key not in obj:
            raise InputError(f"{where}: missing {key!r}")
    return CoordSpec(name=str(obj["name"]), lo=float(obj["lo"]),
                     hi=float(obj["hi"]), units=str(obj.get("units", "")),
                     log10=bool(obj.get("log10", False)))


def load_config(path) -> RunConfig:
    """Parse and validate a JSON config; checks referenced files exist."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise InputError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("controls", "parameters"):
        if key not in raw or not isinstance(raw[key], list):
            raise InputError(f"{path}: {key!r} must be a list of coordinates")

    kwargs = {
        "controls": tuple(_coord_from(c, f"{path}: controls")
                          for c in raw["controls"]),
        "parameters": tuple(_coord_from(c, f"{path}: parameters")
                            for c in raw["parameters"]),
    }
    for key in ("rho_grid", "phi_grid", "lambda_grid"):
        if raw.get(key) is not None:
            kwargs[key] = tuple(raw[key])
    for key in ("folds", "quadrature_m", "n_starts", "seed"):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("physical_csv", "computer_csv"):
        if raw.get(key) is not None:
            kwargs[key] = str(raw[key])

    cfg = RunConfig(**kwargs)
    base = os.path.dirname(os.path.abspath(path))
    for key in ("physical_csv", "computer_csv"):
        rel = getattr(cfg, key)
        if rel is not None:
            full = rel if os.path.isabs(rel) else os.path.join(base, rel)
            if not os.path.exists(full):
                raise InputError(f"{path}: {key} references missing file "
                                 f"{full}")
            object.__setattr__(cfg, f"{key}_path", full)
    return cfg
