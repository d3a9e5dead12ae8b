"""Figure rendering: log-log error plots, rate charts, and contours.

Every function returns the FigureJob it executed, whose ``annotations``
carry the numbers drawn onto the figure (fitted slopes, contour center
value, max DG-vs-exact gap) so tests and callers can assert on them without
parsing images.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import GridData, SchemaError, read_error_csv, read_grid_csv


@dataclass
class FigureJob:
    inputs: tuple
    kind: str
    output: str
    annotations: dict = field(default_factory=dict)


def fit_slope(h, e) -> float:
    """Least-squares slope of log(e) against log(h)."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    mask = (h > 0) & (e > 0) & np.isfinite(e)
    if mask.sum() < 2:
        raise SchemaError("need at least two positive finite levels to fit a slope")
    return float(np.polyfit(np.log(h[mask]), np.log(e[mask]), 1)[0])


def _save(fig, out_path):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)


def plot_errors(csv_paths, out_path, column="l2_error") -> FigureJob:
    """Log-log error-vs-h plot, one series per input CSV, slopes annotated."""
    job = FigureJob(inputs=tuple(str(p) for p in csv_paths), kind="error",
                    output=str(out_path))
    series = [read_error_csv(p) for p in csv_paths]
    for s in series:
        if s.levels < 2:
            raise SchemaError(f"{s.path}: need at least 2 levels, got {s.levels}")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for s in series:
        errors = getattr(s, column)
        slope = fit_slope(s.h, errors)
        job.annotations[s.label] = slope
        ax.loglog(s.h, errors, marker="o", label=f"{s.label}, slope {slope:.2f}")
    ax.set_xlabel("h")
    ax.set_ylabel(column.replace("_", " "))
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, out_path)
    return job


def plot_rates(csv_paths, out_path, column="beta_l2") -> FigureJob:
    """Rate-vs-level chart from the beta columns of the error tables."""
    job = FigureJob(inputs=tuple(str(p) for p in csv_paths), kind="rates",
                    output=str(out_path))
    series = [read_error_csv(p) for p in csv_paths]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    drew = False
    for s in series:
        rates = getattr(s, column)
        pts = [(n, b) for n, b in zip(s.n, rates) if b is not None]
        if not pts:
            continue
        drew = True
        ns, betas = zip(*pts)
        job.annotations[s.label] = betas[-1]
        ax.plot(ns, betas, marker="s", label=s.label)
    if not drew:
        plt.close(fig)
        raise SchemaError("no defined rates to plot in any input series")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("elements per side")
    ax.set_ylabel(column.replace("_", " "))
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, out_path)
    return job


def _grid_square(grid: GridData, values):
    r = grid.resolution
    return (
        grid.x.reshape(r, r),
        grid.y.reshape(r, r),
        np.asarray(values).reshape(r, r),
    )


def plot_contours(grid_path, out_path, column="u_exact") -> FigureJob:
    """Filled contour of one grid column with a symmetric color range.

    Annotates the value at the sample point nearest the domain center and,
    when plotting the DG column, the max |u_h - u_exact| over the grid.
    """
    job = FigureJob(inputs=(str(grid_path),), kind=f"contour_{column}",
                    output=str(out_path))
    grid = read_grid_csv(grid_path)
    if column not in ("u_h", "u_exact"):
        raise SchemaError(f"unknown contour column {column!r}")
    values = getattr(grid, column)
    X, Y, Z = _grid_square(grid, values)

    center = int(np.argmin((grid.x - 0.5) ** 2 + (grid.y - 0.5) ** 2))
    job.annotations["center_value"] = float(values[center])
    title = f"{column}, center {values[center]:.6g}"
    if column == "u_h":
        gap = float(np.abs(grid.u_h - grid.u_exact).max())
        job.annotations["max_abs_diff"] = gap
        title += f", max |u_h - u_exact| {gap:.2e}"

    vmax = float(np.abs(values).max()) or 1.0
    fig, ax = plt.subplots(figsize=(5.6, 4.8))
    im = ax.contourf(X, Y, Z, levels=21, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.set_title(title)
    _save(fig, out_path)
    return job
