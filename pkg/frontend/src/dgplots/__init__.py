"""Figure rendering for the DG solver's convergence-study CSV outputs."""

from .figures import FigureJob, fit_slope, plot_contours, plot_errors, plot_rates
from .io import ErrorSeries, GridData, SchemaError, read_error_csv, read_grid_csv

__version__ = "0.1.0"

__all__ = [
    "FigureJob",
    "fit_slope",
    "plot_contours",
    "plot_errors",
    "plot_rates",
    "ErrorSeries",
    "GridData",
    "SchemaError",
    "read_error_csv",
    "read_grid_csv",
    "__version__",
]
