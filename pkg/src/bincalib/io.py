"""CSV readers and writers for the two dataset shapes.

Physical files carry the control columns followed by a binary ``y``;
computer files carry control columns, then parameter columns, then ``y``.
Headers must match the configured coordinate names. Floats are written
with ``repr`` so a write-read round trip is lossless to the full double
precision (15-17 significant digits). Parse failures point at the
offending one-based line number; domain violations list every bad line.
"""

import csv

import numpy as np

from .datasets import ComputerDataset, PhysicalDataset
from .domains import Domain
from .errors import InputError

__all__ = ["read_physical_csv", "read_computer_csv", "write_physical_csv",
           "write_computer_csv"]


def _parse_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header != list(expected_header):
            raise InputError(
                f"{path}: header {header} does not match the configured "
                f"columns {list(expected_header)}")
        width = len(expected_header)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != width:
                raise InputError(f"{path}: line {lineno}: expected {width} "
                                 f"fields, got {len(rec)}")
            try:
                vals = [float(v) for v in rec]
            except ValueError as exc:
                raise InputError(
                    f"{path}: line {lineno}: {exc}") from None
            y = vals[-1]
            if y not in (0.0, 1.0):
                raise InputError(f"{path}: line {lineno}: y must be 0 or 1, "
                                 f"got {rec[-1]!r}")
            rows.append((lineno, vals))
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def _check_domain(path, rows, block, domain, what):
    inside = domain.contains(block)
    if not np.all(inside):
        lines = [rows[i][0] for i in np.nonzero(~inside)[0]]
        raise InputError(
            f"{path}: {what} outside the configured domain on lines "
            f"{lines[:20]}" + (" ..." if len(lines) > 20 else ""))


def read_physical_csv(path, domain: Domain) -> PhysicalDataset:
    """Read control columns + y against the given control domain."""
    rows = _parse_rows(path, tuple(domain.names) + ("y",))
    data = np.array([v for _, v in rows])
    x, y = data[:, :-1], data[:, -1]
    _check_domain(path, rows, x, domain, "control inputs")
    return PhysicalDataset(x, y, domain)


def read_computer_csv(path, domain_x: Domain, domain_theta: Domain
                      ) -> ComputerDataset:
    """Read control + parameter columns + y against both domains."""
    rows = _parse_rows(
        path, tuple(domain_x.names) + tuple(domain_theta.names) + ("y",))
    data = np.array([v for _, v in rows])
    d = domain_x.k
    x, theta, y = data[:, :d], data[:, d:-1], data[:, -1]
    _check_domain(path, rows, x, domain_x, "control inputs")
    _check_domain(path, rows, theta, domain_theta, "parameters")
    return ComputerDataset(x, theta, y, domain_x, domain_theta)


def _write(path, header, blocks):
    mat = np.column_stack(blocks)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in mat:
            w.writerow([repr(float(v)) for v in row[:-1]]
                       + [str(int(row[-1]))])


def write_physical_csv(path, data: PhysicalDataset) -> None:
    _write(path, tuple(data.domain.names) + ("y",), (data.x, data.y))


def write_computer_csv(path, data: ComputerDataset) -> None:
    _write(path,
           tuple(data.domain_x.names) + tuple(data.domain_theta.names) + ("y",),
           (data.x, data.theta, data.y))
