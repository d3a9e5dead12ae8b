"""Readers for the solver CLI's CSV schemas.

Two file kinds are consumed: per-degree error tables
(``n,h,dofs,l2_error,h1_error,triple_surrogate,beta_l2,beta_h1,beta_triple``,
rate cells empty on the first level and ``undefined`` in the exactness
regime) and solution grid dumps (``x,y,u_h,u_exact`` on a square sample
grid).  Everything downstream works purely off these files; no solver code
is imported anywhere in this package.
"""

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ERROR_COLUMNS = [
    "n", "h", "dofs", "l2_error", "h1_error", "triple_surrogate",
    "beta_l2", "beta_h1", "beta_triple",
]
GRID_COLUMNS = ["x", "y", "u_h", "u_exact"]


class SchemaError(ValueError):
    """Input file does not match the expected CSV contract."""


@dataclass(frozen=True)
class ErrorSeries:
    label: str
    path: str
    n: np.ndarray
    h: np.ndarray
    dofs: np.ndarray
    l2_error: np.ndarray
    h1_error: np.ndarray
    triple_surrogate: np.ndarray
    beta_l2: tuple
    beta_h1: tuple
    beta_triple: tuple

    @property
    def levels(self) -> int:
        return len(self.n)


@dataclass(frozen=True)
class GridData:
    path: str
    x: np.ndarray
    y: np.ndarray
    u_h: np.ndarray
    u_exact: np.ndarray

    @property
    def resolution(self) -> int:
        r = math.isqrt(len(self.x))
        if r * r != len(self.x):
            raise SchemaError(
                f"{self.path}: {len(self.x)} rows is not a square sample grid"
            )
        return r


def _series_label(path: Path) -> str:
    match = re.search(r"_p(\d+)\.csv$", path.name)
    return f"p={match.group(1)}" if match else path.stem


def _parse_rate(cell: str, where: str):
    cell = cell.strip()
    if cell == "":
        return None
    if cell == "undefined":
        return None
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(f"{where}: bad rate value {cell!r}")


def read_error_csv(path) -> ErrorSeries:
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if header != ERROR_COLUMNS:
            missing = sorted(set(ERROR_COLUMNS) - set(header))
            raise SchemaError(
                f"{path}: unexpected error-table header {header}; "
                f"missing columns: {missing or 'none (wrong order or extras)'}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    try:
        n = np.array([int(r[0]) for r in rows])
        h = np.array([float(r[1]) for r in rows])
        dofs = np.array([int(r[2]) for r in rows])
        l2 = np.array([float(r[3]) for r in rows])
        h1 = np.array([float(r[4]) for r in rows])
        triple = np.array([float(r[5]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed data row: {exc}")
    where = str(path)
    return ErrorSeries(
        label=_series_label(path),
        path=where,
        n=n, h=h, dofs=dofs,
        l2_error=l2, h1_error=h1, triple_surrogate=triple,
        beta_l2=tuple(_parse_rate(r[6], where) for r in rows),
        beta_h1=tuple(_parse_rate(r[7], where) for r in rows),
        beta_triple=tuple(_parse_rate(r[8], where) for r in rows),
    )


def read_grid_csv(path) -> GridData:
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if header != GRID_COLUMNS:
            raise SchemaError(
                f"{path}: unexpected grid header {header}; expected {GRID_COLUMNS}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: empty grid")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed data row: {exc}")
    if data.shape[1] != 4:
        raise SchemaError(f"{path}: expected 4 columns, got {data.shape[1]}")
    return GridData(
        path=str(path), x=data[:, 0], y=data[:, 1], u_h=data[:, 2], u_exact=data[:, 3]
    )
