"""Global assembly of the discrete problem, manufactured cases, and solvers.

Dofs are laid out element-major in dense blocks of size dim(basis); the
matrix rows are test functions, so row i of ``A u = b`` states
``B(u_h, phi_i) = L(phi_i)``.  Assembly walks elements, then vertical
interior faces, horizontal interior faces, and the four boundary edge
groups, in that fixed order, so repeated assemblies are bit-identical.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .forms import (
    CoefficientField,
    FormEvaluationError,
    FormParams,
    stabilization_weight,
    trace_tables,
)
from .mesh import MeshTopology
from .refelem import BasisSet, QuadratureRule, eval_basis, make_edge_rule, make_volume_rule

DEFAULT_DOF_CAP = 200_000


class SolverError(RuntimeError):
    """Raised on linear-solver breakdown or an unmet residual tolerance."""


@dataclass(frozen=True)
class DofMap:
    n_elements: int
    block_size: int

    @property
    def total_dofs(self) -> int:
        return self.n_elements * self.block_size

    def offset(self, element: int) -> int:
        return element * self.block_size


@dataclass(frozen=True)
class DGSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    params: FormParams
    mesh: MeshTopology
    basis: BasisSet


@dataclass(frozen=True)
class SolutionField:
    """Discrete solution with an element-local point evaluator."""

    mesh: MeshTopology
    basis: BasisSet
    coefficients: np.ndarray

    def eval_in_element(self, element: int, phys_points: np.ndarray):
        """Value and gradient at physical points using that element's dofs."""
        amap = self.mesh.elements[element].affine_map
        ref = amap.invert(phys_points)
        vals, grads = eval_basis(self.basis, ref)
        nb = self.basis.dimension
        c = self.coefficients[element * nb : (element + 1) * nb]
        u = vals @ c
        gu = np.einsum("qbi,b->qi", grads @ np.linalg.inv(amap.linear), c)
        return u, gu

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Element indices containing the points (ties broken toward lower cells)."""
        points = np.asarray(points, dtype=float)
        n = self.mesh.n_per_side
        ij = np.clip(np.floor(points / self.mesh.h).astype(np.int64), 0, n - 1)
        return ij[..., 1] * n + ij[..., 0]

    def evaluate(self, points: np.ndarray):
        """Values and gradients at arbitrary points of the unit square."""
        points = np.asarray(points, dtype=float)
        elems = self.locate(points)
        values = np.empty(points.shape[0])
        gradients = np.empty((points.shape[0], 2))
        for e in np.unique(elems):
            mask = elems == e
            values[mask], gradients[mask] = self.eval_in_element(int(e), points[mask])
        return values, gradients


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution / coefficient / source triple for error studies."""

    name: str
    coefficient: CoefficientField
    exact: Callable
    exact_gradient: Callable
    source: Callable


def default_rules(p: int):
    """Stiffness-quadrature order q = p + 3 and the refined q + 2 rule."""
    q = p + 3
    return make_volume_rule(q), make_edge_rule(q), make_volume_rule(q + 2)


def assemble(mesh: MeshTopology, basis: BasisSet, K: CoefficientField, f,
             params: FormParams, *, volume_rule: Optional[QuadratureRule] = None,
             edge_rule: Optional[QuadratureRule] = None,
             rhs_rule: Optional[QuadratureRule] = None,
             dof_cap: int = DEFAULT_DOF_CAP) -> DGSystem:
    """Assemble the sparse DG operator and load vector."""
    if volume_rule is None or edge_rule is None or rhs_rule is None:
        dvol, dedge, drhs = default_rules(params.p)
        volume_rule = volume_rule or dvol
        edge_rule = edge_rule or dedge
        rhs_rule = rhs_rule or drhs

    nb = basis.dimension
    ne = mesh.n_elements
    ndof = ne * nb
    if ndof > dof_cap:
        raise ValueError(
            f"dof count {ndof} exceeds the configured cap {dof_cap}; "
            "raise dof_cap explicitly for larger runs"
        )

    h = mesh.h
    centers = mesh.element_centers()
    rows, cols, data = [], [], []
    arange_nb = np.arange(nb)

    def push(row_elems, col_elems, blocks):
        r = row_elems[:, None, None] * nb + arange_nb[None, :, None]
        c = col_elems[:, None, None] * nb + arange_nb[None, None, :]
        shape = blocks.shape
        rows.append(np.broadcast_to(r, shape).ravel())
        cols.append(np.broadcast_to(c, shape).ravel())
        data.append(blocks.ravel())

    # Volume terms: identical tables on every element of the uniform mesh.
    vals, grads = eval_basis(basis, volume_rule.points)
    gphys = np.ascontiguousarray((2.0 / h) * grads)
    vals = np.ascontiguousarray(vals)
    wdet = np.ascontiguousarray(volume_rule.weights * (0.5 * h) ** 2)
    phys = centers[:, None, :] + (0.5 * h) * volume_rule.points[None, :, :]
    kv = np.ascontiguousarray(
        np.stack([K.evaluate(e, phys[e]) for e in range(ne)]), dtype=float
    )
    if np.any(kv <= 0.0) or not np.all(np.isfinite(kv)):
        bad = int(np.argmin(kv.min(axis=1)))
        raise FormEvaluationError(
            f"coefficient K violates positivity on element {bad}: "
            f"min K = {kv.min():.6g}"
        )
    all_elems = np.arange(ne)
    push(all_elems, all_elems, _kernels.volume_blocks(wdet, vals, gphys, kv))

    # Interior faces, one vectorized pass per orientation.
    stab = stabilization_weight(params, h)
    jw = np.ascontiguousarray(edge_rule.weights * (0.5 * h))
    for group, along in _interior_groups(mesh):
        if not group:
            continue
        normal = group[0].normal
        v_hi, gn_hi = trace_tables(basis, edge_rule, h, normal, "hi")
        v_lo, gn_lo = trace_tables(basis, edge_rule, h, normal, "lo")
        hi = np.array([fc.elem_hi for fc in group])
        lo = np.array([fc.elem_lo for fc in group])
        k_hi, k_lo = _face_coefficients(K, group, edge_rule, along, h)
        hh, hl, lh, ll = _kernels.interior_face_blocks(
            jw, v_hi, v_lo, gn_hi, gn_lo, k_hi, k_lo, stab
        )
        push(hi, hi, hh)
        push(hi, lo, hl)
        push(lo, hi, lh)
        push(lo, lo, ll)

    # Boundary faces, grouped by outward normal.
    for group, along in _boundary_groups(mesh):
        if not group:
            continue
        normal = group[0].normal
        v, gn = trace_tables(basis, edge_rule, h, normal, "boundary")
        elems = np.array([fc.elem_hi for fc in group])
        kb, _ = _face_coefficients(K, group, edge_rule, along, h, one_sided=True)
        push(elems, elems, _kernels.boundary_face_blocks(jw, v, gn, kb))

    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ndof, ndof),
    ).tocsr()

    # Load vector on the refined rule.
    rvals, _ = eval_basis(basis, rhs_rule.points)
    rwdet = np.ascontiguousarray(rhs_rule.weights * (0.5 * h) ** 2)
    rphys = centers[:, None, :] + (0.5 * h) * rhs_rule.points[None, :, :]
    fv = np.ascontiguousarray(
        np.stack([np.asarray(f(rphys[e, :, 0], rphys[e, :, 1]), dtype=float) for e in range(ne)])
    )
    rhs = _kernels.load_vectors(rwdet, np.ascontiguousarray(rvals), fv).ravel()

    return DGSystem(
        matrix=matrix,
        rhs=rhs,
        dof_map=DofMap(n_elements=ne, block_size=nb),
        params=params,
        mesh=mesh,
        basis=basis,
    )


def _interior_groups(mesh: MeshTopology):
    vertical = [fc for fc in mesh.interior_faces if fc.normal[0] != 0.0]
    horizontal = [fc for fc in mesh.interior_faces if fc.normal[1] != 0.0]
    return ((vertical, np.array([0.0, 1.0])), (horizontal, np.array([1.0, 0.0])))


def _boundary_groups(mesh: MeshTopology):
    groups = []
    for normal, along in (
        ((0.0, -1.0), np.array([1.0, 0.0])),
        ((1.0, 0.0), np.array([0.0, 1.0])),
        ((0.0, 1.0), np.array([1.0, 0.0])),
        ((-1.0, 0.0), np.array([0.0, 1.0])),
    ):
        group = [
            fc for fc in mesh.boundary_faces if tuple(fc.normal) == normal
        ]
        groups.append((group, along))
    return groups


def _face_coefficients(K, group, edge_rule, along, h, one_sided=False):
    t = edge_rule.points
    mids = np.array([fc.midpoint for fc in group])
    phys = mids[:, None, :] + (0.5 * h) * t[None, :, None] * along[None, None, :]
    k_hi = np.ascontiguousarray(
        np.stack([K.evaluate(fc.elem_hi, phys[i]) for i, fc in enumerate(group)]),
        dtype=float,
    )
    if one_sided:
        return k_hi, None
    k_lo = np.ascontiguousarray(
        np.stack([K.evaluate(fc.elem_lo, phys[i]) for i, fc in enumerate(group)]),
        dtype=float,
    )
    return k_hi, k_lo


def solve(system: DGSystem, strategy: str = "direct", tol: float = 1e-12) -> SolutionField:
    """Solve the assembled system to a relative residual of ``tol``."""
    A, b = system.matrix, system.rhs
    if strategy == "direct":
        try:
            lu = spla.splu(A.tocsc())
            x = lu.solve(b)
            # one step of iterative refinement keeps the residual near
            # machine precision on the larger systems
            x = x + lu.solve(b - A @ x)
        except RuntimeError as exc:
            raise SolverError(f"sparse direct factorization failed: {exc}") from exc
    elif strategy == "iterative":
        x = _gmres_block_jacobi(system, tol)
    else:
        raise ValueError(f"unknown solver strategy {strategy!r}")

    res = float(np.linalg.norm(A @ x - b))
    scale = float(np.linalg.norm(b))
    rel = res / scale if scale > 0 else res
    if not np.isfinite(rel) or rel > tol:
        raise SolverError(
            f"solver residual {rel:.3e} exceeds tolerance {tol:.3e} ({strategy})"
        )
    return SolutionField(mesh=system.mesh, basis=system.basis, coefficients=x)


def _gmres_block_jacobi(system: DGSystem, tol: float) -> np.ndarray:
    A, b = system.matrix, system.rhs
    ne, nb = system.dof_map.n_elements, system.dof_map.block_size
    dinv = np.stack(
        [
            np.linalg.inv(A[e * nb : (e + 1) * nb, e * nb : (e + 1) * nb].toarray())
            for e in range(ne)
        ]
    )

    def precondition(x):
        return np.einsum("eab,eb->ea", dinv, x.reshape(ne, nb)).ravel()

    M = spla.LinearOperator(A.shape, matvec=precondition)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = spla.gmres(
        A, b, M=M, rtol=tol, atol=0.0, restart=50, maxiter=400,
        callback=count, callback_type="pr_norm",
    )
    if info != 0:
        raise SolverError(
            f"gmres failed to converge (info={info}) after {iterations} iterations"
        )
    return x


def paper_case() -> ManufacturedCase:
    """The reproduction experiment: K = x y, u = x y (1-x)(1-y).

    The source was derived symbolically and cross-checked against finite
    differences of -div(K grad u) + u in the test suite:
    f = -[y^2 (1-y)(1-4x) + x^2 (1-x)(1-4y)] + x y (1-x)(1-y).
    """

    def exact(x, y):
        return x * y * (1.0 - x) * (1.0 - y)

    def exact_gradient(x, y):
        gx = (1.0 - 2.0 * x) * (y - y * y)
        gy = (x - x * x) * (1.0 - 2.0 * y)
        return np.stack([gx, gy], axis=-1)

    def source(x, y):
        div_flux = y * y * (1.0 - y) * (1.0 - 4.0 * x) + x * x * (1.0 - x) * (
            1.0 - 4.0 * y
        )
        return -div_flux + exact(x, y)

    return ManufacturedCase(
        name="paper",
        coefficient=CoefficientField.from_xy(lambda x, y: x * y, 0.0, 1.0),
        exact=exact,
        exact_gradient=exact_gradient,
        source=source,
    )


def sine_case() -> ManufacturedCase:
    """Non-polynomial solution with K bounded away from zero.

    K = x y + 0.1 keeps the lower coefficient bound positive; u =
    sin(pi x) sin(pi y) is outside every polynomial space, so rate
    measurements stay non-degenerate for all supported p.
    """

    def exact(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    def exact_gradient(x, y):
        gx = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
        gy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
        return np.stack([gx, gy], axis=-1)

    def source(x, y):
        sx, sy = np.sin(np.pi * x), np.sin(np.pi * y)
        cx, cy = np.cos(np.pi * x), np.cos(np.pi * y)
        div_flux = np.pi * (y * cx * sy + x * sx * cy) - 2.0 * np.pi**2 * (
            x * y + 0.1
        ) * sx * sy
        return -div_flux + sx * sy

    return ManufacturedCase(
        name="sine",
        coefficient=CoefficientField.from_xy(lambda x, y: x * y + 0.1, 0.1, 1.1),
        exact=exact,
        exact_gradient=exact_gradient,
        source=source,
    )


CASES = {"paper": paper_case, "sine": sine_case}
