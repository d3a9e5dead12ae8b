"""Flux-jump stabilized discontinuous Galerkin solver for 2D reaction-diffusion.

Solves -div(K grad u) + u = f on the unit square with weak homogeneous
Dirichlet conditions, using a nonsymmetric DG formulation stabilized by a
penalty on the inter-element jumps of the normal flux.  Ships convergence
and stability diagnostics plus a batch CLI (``fluxdg``).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .forms import CoefficientField, FormParams
from .mesh import MeshTopology, build_uniform_quad_mesh, face_trace_points
from .refelem import make_basis, make_edge_rule, make_volume_rule
from .system import (
    DGSystem,
    ManufacturedCase,
    SolutionField,
    SolverError,
    assemble,
    paper_case,
    sine_case,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "CoefficientField",
    "FormParams",
    "MeshTopology",
    "build_uniform_quad_mesh",
    "face_trace_points",
    "make_basis",
    "make_edge_rule",
    "make_volume_rule",
    "DGSystem",
    "ManufacturedCase",
    "SolutionField",
    "SolverError",
    "assemble",
    "paper_case",
    "sine_case",
    "solve",
    "__version__",
]
