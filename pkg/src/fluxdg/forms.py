"""Local kernels of the flux-jump stabilized DG bilinear and linear forms.

The global bilinear form combines, per interior face, the per-element
boundary integrals and the interface jump/average integrals.  Using
``[ab] = [a]<b> + <a>[b]`` the two fuse into a single face contribution

    int_f ( [u] <K grad v . n>  -  [v] <K grad u . n> ) ds
    + stab * int_f [K grad u . n] [K grad v . n] ds

with ``stab = sigma * h^lambda / p^zeta``, jump ``[w] = w|hi - w|lo`` and
``n`` the face normal stored on the mesh (outward from the hi element).
On boundary faces the Dirichlet condition is imposed weakly through

    int_f ( u (K grad v . mu) - v (K grad u . mu) ) ds,

mu being the outward normal of the domain.  At u = v every first-order face
term cancels in pairs, so B(v, v) reduces to the volume terms plus the
flux-jump penalty; the assembly tests pin that identity down.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .mesh import EDGE_NORMALS, Face, MeshTopology
from .refelem import BasisSet, QuadratureRule, eval_basis


class FormEvaluationError(ValueError):
    """Raised when a kernel precondition is violated (e.g. K <= 0)."""


@dataclass(frozen=True)
class FormParams:
    """Stabilization and norm parameter bundle (sigma, lambda, zeta, nu, theta, p).

    ``lam`` is the spec's lambda exponent (reserved word in Python).
    """

    sigma: float
    lam: float = 1.0
    zeta: float = 2.0
    nu: float = 1.0
    theta: float = 2.0
    p: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        for name in ("lam", "zeta", "nu", "theta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")


def stabilization_weight(params: FormParams, h: float) -> float:
    """The flux-jump penalty factor sigma * h^lambda / p^zeta."""
    return params.sigma * h**params.lam / float(params.p) ** params.zeta


@dataclass(frozen=True)
class CoefficientField:
    """Elementwise diffusion coefficient K.

    ``evaluate(element_index, points)`` returns K at physical points; the
    per-element signature keeps one-sided face values well defined when K is
    discontinuous across faces.  ``k_min``/``k_max`` record the declared
    bounds (k_min may be 0 for coefficients that degenerate on a measure-zero
    set; kernels still reject nonpositive values at volume quadrature
    points).
    """

    evaluate: Callable[[int, np.ndarray], np.ndarray]
    k_min: float
    k_max: float

    @classmethod
    def from_xy(cls, fn, k_min, k_max):
        def evaluate(elem, pts):
            pts = np.asarray(pts, dtype=float)
            return np.asarray(fn(pts[..., 0], pts[..., 1]), dtype=float)

        return cls(evaluate=evaluate, k_min=float(k_min), k_max=float(k_max))

    @classmethod
    def constant(cls, value):
        value = float(value)

        def evaluate(elem, pts):
            pts = np.asarray(pts, dtype=float)
            return np.full(pts.shape[:-1], value)

        return cls(evaluate=evaluate, k_min=value, k_max=value)


@dataclass(frozen=True)
class LocalBlock:
    """Dense coupling block between the dofs of two elements."""

    row_element: int
    col_element: int
    matrix: np.ndarray


def edge_id_for_normal(normal: np.ndarray) -> int:
    for eid in range(4):
        if np.array_equal(EDGE_NORMALS[eid], normal):
            return eid
    raise ValueError(f"normal {normal} is not axis-aligned")


def edge_reference_points(edge_id: int, t: np.ndarray) -> np.ndarray:
    """Reference coordinates of edge-parameter values t on a local edge.

    The parametrizations run left-to-right / bottom-to-top, matching the
    endpoint ordering of mesh faces.
    """
    t = np.asarray(t, dtype=float)
    ones = np.ones_like(t)
    if edge_id == 0:  # bottom
        return np.column_stack([t, -ones])
    if edge_id == 1:  # right
        return np.column_stack([ones, t])
    if edge_id == 2:  # top
        return np.column_stack([t, ones])
    if edge_id == 3:  # left
        return np.column_stack([-ones, t])
    raise ValueError(f"edge_id must be 0..3, got {edge_id}")


def trace_tables(basis: BasisSet, edge_rule: QuadratureRule, h: float,
                 face_normal: np.ndarray, side: str):
    """Tabulated values and normal flux derivatives on one side of a face.

    ``side`` is "hi", "lo" or "boundary"; the returned ``gn`` is the
    physical directional derivative along the *face* normal, which for the
    lo side is minus that element's outward normal.
    """
    mu = face_normal if side in ("hi", "boundary") else -face_normal
    eid = edge_id_for_normal(mu)
    ref_pts = edge_reference_points(eid, edge_rule.points)
    vals, grads = eval_basis(basis, ref_pts)
    gn = (2.0 / h) * (grads @ face_normal)
    return np.ascontiguousarray(vals), np.ascontiguousarray(gn)


def _coefficient_on_trace(K, elem, phys):
    return np.ascontiguousarray(np.atleast_2d(K.evaluate(elem, phys)), dtype=float)


def volume_kernel(element, basis: BasisSet, rule: QuadratureRule,
                  K: CoefficientField) -> LocalBlock:
    """Weighted stiffness + mass block int_E (K grad u . grad v + u v) dx."""
    if rule.is_edge_rule:
        raise ValueError("volume_kernel requires a volume rule")
    amap = element.affine_map
    vals, grads = eval_basis(basis, rule.points)
    gphys = grads @ np.linalg.inv(amap.linear)
    phys = amap.apply(rule.points)
    kv = np.asarray(K.evaluate(element.index, phys), dtype=float)
    if np.any(kv <= 0.0) or not np.all(np.isfinite(kv)):
        raise FormEvaluationError(
            f"coefficient K violates positivity on element {element.index}: "
            f"min K = {kv.min():.6g}"
        )
    wdet = rule.weights * abs(amap.det)
    block = _kernels.volume_blocks(
        np.ascontiguousarray(wdet),
        np.ascontiguousarray(vals),
        np.ascontiguousarray(gphys),
        kv[None, :],
    )[0]
    return LocalBlock(row_element=element.index, col_element=element.index, matrix=block)


def interior_face_kernel(mesh: MeshTopology, face: Face, basis: BasisSet,
                         edge_rule: QuadratureRule, K: CoefficientField,
                         params: FormParams):
    """All face contributions of one interior face as four LocalBlocks.

    Returns (hi-hi, hi-lo, lo-hi, lo-lo); rows are test dofs, columns trial
    dofs of the respective elements.
    """
    if face.kind != "interior":
        raise ValueError("interior_face_kernel requires an interior face")
    if face.length <= 0.0:
        raise ValueError("degenerate zero-length face")
    h = mesh.h
    v_hi, gn_hi = trace_tables(basis, edge_rule, h, face.normal, "hi")
    v_lo, gn_lo = trace_tables(basis, edge_rule, h, face.normal, "lo")
    mid = face.midpoint
    half = 0.5 * (face.endpoints[1] - face.endpoints[0])
    phys = mid + np.outer(edge_rule.points, half)
    k_hi = _coefficient_on_trace(K, face.elem_hi, phys)
    k_lo = _coefficient_on_trace(K, face.elem_lo, phys)
    jw = np.ascontiguousarray(edge_rule.weights * (0.5 * face.length))
    stab = stabilization_weight(params, h)
    hh, hl, lh, ll = _kernels.interior_face_blocks(
        jw, v_hi, v_lo, gn_hi, gn_lo, k_hi, k_lo, stab
    )
    i, j = face.elem_hi, face.elem_lo
    return (
        LocalBlock(i, i, hh[0]),
        LocalBlock(i, j, hl[0]),
        LocalBlock(j, i, lh[0]),
        LocalBlock(j, j, ll[0]),
    )


def boundary_face_kernel(mesh: MeshTopology, face: Face, basis: BasisSet,
                         edge_rule: QuadratureRule, K: CoefficientField) -> LocalBlock:
    """Weak-Dirichlet block of one boundary face (antisymmetric)."""
    if face.kind != "boundary":
        raise ValueError("boundary_face_kernel requires a boundary face")
    v, gn = trace_tables(basis, edge_rule, mesh.h, face.normal, "boundary")
    mid = face.midpoint
    half = 0.5 * (face.endpoints[1] - face.endpoints[0])
    phys = mid + np.outer(edge_rule.points, half)
    kv = _coefficient_on_trace(K, face.elem_hi, phys)
    jw = np.ascontiguousarray(edge_rule.weights * (0.5 * face.length))
    block = _kernels.boundary_face_blocks(jw, v, gn, kv)[0]
    return LocalBlock(face.elem_hi, face.elem_hi, block)


def load_kernel(element, basis: BasisSet, rule: QuadratureRule, f) -> np.ndarray:
    """Moment vector int_E f * phi_k dx."""
    if rule.is_edge_rule:
        raise ValueError("load_kernel requires a volume rule")
    amap = element.affine_map
    vals, _ = eval_basis(basis, rule.points)
    phys = amap.apply(rule.points)
    fv = np.asarray(f(phys[:, 0], phys[:, 1]), dtype=float)
    wdet = rule.weights * abs(amap.det)
    return _kernels.load_vectors(
        np.ascontiguousarray(wdet),
        np.ascontiguousarray(vals),
        np.ascontiguousarray(fv[None, :]),
    )[0]
