"""Error norms, convergence rates, stability constants, and inequality probes.

Functions here consume *elementwise fields*: callables ``field(element,
points) -> (values, gradients)`` evaluated one-sided inside a given element.
Both discrete solutions and smooth exact solutions fit that protocol, which
is what makes jump/average quantities on faces well defined for either.

The mesh-dependent triple norm is reported as a computable surrogate: the
dual boundary-flux norm is replaced by ``h_E * ||K grad v . mu||^2_{L2(dE)}``
per element (the half-order Sobolev-index scaling).  Surrogate values are
comparable across runs of this package but are not the abstract constant of
the theory; studies gate on trends, not absolute values.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .forms import (
    CoefficientField,
    FormParams,
    edge_reference_points,
    stabilization_weight,
    trace_tables,
)
from .mesh import EDGE_NORMALS, MeshTopology
from .refelem import (
    BasisSet,
    QuadratureRule,
    eval_basis,
    eval_basis_hessians,
    make_edge_rule,
    make_volume_rule,
)
from .system import DGSystem, ManufacturedCase, SolutionField

DENSE_DOF_LIMIT = 2000


@dataclass(frozen=True)
class NormWeights:
    """Exponents and factors of the (surrogate) triple norm."""

    nu: float
    theta: float
    lam: float
    zeta: float
    sigma: float
    p: int
    h: float

    @classmethod
    def from_params(cls, params: FormParams, h: float) -> "NormWeights":
        return cls(
            nu=params.nu,
            theta=params.theta,
            lam=params.lam,
            zeta=params.zeta,
            sigma=params.sigma,
            p=params.p,
            h=h,
        )


@dataclass(frozen=True)
class LevelRecord:
    n: int
    h: float
    dofs: int
    l2_error: float
    h1_error: float
    triple_error: float


@dataclass(frozen=True)
class ErrorReport:
    """Per-level errors plus rates between adjacent halvings of h."""

    case: str
    p: int
    levels: tuple
    beta_l2: tuple
    beta_h1: tuple
    beta_triple: tuple


@dataclass(frozen=True)
class ProbeReport:
    """Empirical maxima of the trace/inverse-inequality ratios."""

    h: float
    p: int
    samples: int
    skipped: int
    seed: int
    r1_max: float
    r2_max: float
    r3_max: float


# ---------------------------------------------------------------------------
# field protocol helpers

def solution_field(u_h: SolutionField):
    return u_h.eval_in_element


def exact_field(case: ManufacturedCase):
    def field(elem, pts):
        pts = np.asarray(pts, dtype=float)
        return (
            np.asarray(case.exact(pts[:, 0], pts[:, 1]), dtype=float),
            np.asarray(case.exact_gradient(pts[:, 0], pts[:, 1]), dtype=float),
        )

    return field


def error_field(u_h: SolutionField, case: ManufacturedCase):
    exact = exact_field(case)

    def field(elem, pts):
        v, g = u_h.eval_in_element(elem, pts)
        ve, ge = exact(elem, pts)
        return v - ve, g - ge

    return field


def _default_error_rule(basis: BasisSet) -> QuadratureRule:
    # stiffness quadrature is q = p + 3; error integrals use q + 2
    return make_volume_rule(basis.degree + 5)


def _element_samples(mesh: MeshTopology, rule: QuadratureRule):
    h = mesh.h
    centers = mesh.element_centers()
    phys = centers[:, None, :] + 0.5 * h * rule.points[None, :, :]
    wdet = rule.weights * (0.5 * h) ** 2
    return phys, wdet


# ---------------------------------------------------------------------------
# error norms

def l2_error(u_h: SolutionField, u_exact: Callable,
             rule: Optional[QuadratureRule] = None) -> float:
    """Broken L2 norm of u_h - u_exact."""
    rule = rule or _default_error_rule(u_h.basis)
    phys, wdet = _element_samples(u_h.mesh, rule)
    vals, _ = eval_basis(u_h.basis, rule.points)
    coeffs = u_h.coefficients.reshape(u_h.mesh.n_elements, -1)
    diff = coeffs @ vals.T - np.asarray(u_exact(phys[:, :, 0], phys[:, :, 1]), dtype=float)
    return float(np.sqrt(np.sum(wdet * diff**2)))


def broken_h1_error(u_h: SolutionField, u_exact: Callable, u_exact_gradient: Callable,
                    rule: Optional[QuadratureRule] = None) -> float:
    """Broken H1 norm of the error (elementwise, no face terms)."""
    rule = rule or _default_error_rule(u_h.basis)
    mesh = u_h.mesh
    phys, wdet = _element_samples(mesh, rule)
    vals, grads = eval_basis(u_h.basis, rule.points)
    coeffs = u_h.coefficients.reshape(mesh.n_elements, -1)
    diff = coeffs @ vals.T - np.asarray(u_exact(phys[:, :, 0], phys[:, :, 1]), dtype=float)
    gdiff = np.einsum("eb,qbi->eqi", coeffs, grads) * (2.0 / mesh.h)
    gdiff -= np.asarray(u_exact_gradient(phys[:, :, 0], phys[:, :, 1]), dtype=float)
    total = np.sum(wdet * diff**2) + np.sum(wdet * np.sum(gdiff**2, axis=-1))
    return float(np.sqrt(total))


def triple_norm_surrogate(mesh: MeshTopology, K: CoefficientField, field,
                          weights: NormWeights,
                          volume_rule: Optional[QuadratureRule] = None,
                          edge_rule: Optional[QuadratureRule] = None) -> float:
    """Computable surrogate of the mesh-dependent triple norm.

    Sums, with the configured exponents, the elementwise K-weighted
    H1-type norms, ``(h^nu / p^theta) * h_E`` times the one-sided boundary
    flux L2 norms, and the flux-jump seminorm on interior faces.
    """
    volume_rule = volume_rule or make_volume_rule(weights.p + 5)
    edge_rule = edge_rule or make_edge_rule(weights.p + 5)
    h = mesh.h
    ne = mesh.n_elements

    phys, wdet = _element_samples(mesh, volume_rule)
    star = 0.0
    for e in range(ne):
        v, g = field(e, phys[e])
        kq = np.asarray(K.evaluate(e, phys[e]), dtype=float)
        star += float(np.sum(wdet * (kq * np.sum(g**2, axis=-1) + v**2)))

    # one-sided boundary flux term over every element edge
    jw = edge_rule.weights * (0.5 * h)
    bnd = 0.0
    for eid in range(4):
        mu = EDGE_NORMALS[eid]
        ref = edge_reference_points(eid, edge_rule.points)
        for e in range(ne):
            el = mesh.elements[e]
            pts = el.affine_map.apply(ref)
            _, g = field(e, pts)
            kq = np.asarray(K.evaluate(e, pts), dtype=float)
            flux = kq * (g @ mu)
            bnd += el.diameter * float(np.sum(jw * flux**2))
    bnd *= weights.h**weights.nu / float(weights.p) ** weights.theta

    jump = 0.0
    for fc in mesh.interior_faces:
        mid = fc.midpoint
        half = 0.5 * (fc.endpoints[1] - fc.endpoints[0])
        pts = mid + np.outer(edge_rule.points, half)
        _, g_hi = field(fc.elem_hi, pts)
        _, g_lo = field(fc.elem_lo, pts)
        k_hi = np.asarray(K.evaluate(fc.elem_hi, pts), dtype=float)
        k_lo = np.asarray(K.evaluate(fc.elem_lo, pts), dtype=float)
        jf = k_hi * (g_hi @ fc.normal) - k_lo * (g_lo @ fc.normal)
        jump += float(np.sum(edge_rule.weights * (0.5 * fc.length) * jf**2))
    jump *= weights.sigma * weights.h**weights.lam / float(weights.p) ** weights.zeta

    return float(np.sqrt(star + bnd + jump))


def convergence_rates(errors: Sequence[float], zero_floor: float = 1e-12):
    """log2 error ratios between successive levels; None when undefined.

    Rates are undefined for non-finite errors and for errors at or below
    ``zero_floor``: in the exactness regime the measured error is solver
    noise, not discretization error, and its ratio is meaningless.
    """
    rates = []
    for e0, e1 in zip(errors[:-1], errors[1:]):
        if (
            e0 is None or e1 is None
            or not (math.isfinite(e0) and math.isfinite(e1))
            or e0 <= zero_floor or e1 <= zero_floor
        ):
            rates.append(None)
        else:
            rates.append(math.log(e0 / e1) / math.log(2.0))
    return rates


def build_error_report(case: str, p: int, levels: Sequence[LevelRecord]) -> ErrorReport:
    for prev, cur in zip(levels[:-1], levels[1:]):
        if cur.n != 2 * prev.n:
            raise ValueError(
                f"levels must halve h exactly: got n={prev.n} then n={cur.n}"
            )
    return ErrorReport(
        case=case,
        p=p,
        levels=tuple(levels),
        beta_l2=tuple(convergence_rates([r.l2_error for r in levels])),
        beta_h1=tuple(convergence_rates([r.h1_error for r in levels])),
        beta_triple=tuple(convergence_rates([r.triple_error for r in levels])),
    )


# ---------------------------------------------------------------------------
# stability: inf-sup constant and norm Gram matrix

def surrogate_norm_matrix(mesh: MeshTopology, basis: BasisSet, params: FormParams,
                          K: CoefficientField,
                          volume_rule: Optional[QuadratureRule] = None,
                          edge_rule: Optional[QuadratureRule] = None) -> np.ndarray:
    """Dense Gram matrix of the surrogate triple norm (symmetric positive definite)."""
    q = params.p + 3
    volume_rule = volume_rule or make_volume_rule(q)
    edge_rule = edge_rule or make_edge_rule(q)
    h = mesh.h
    ne, nb = mesh.n_elements, basis.dimension
    ndof = ne * nb
    N = np.zeros((ndof, ndof))

    vals, grads = eval_basis(basis, volume_rule.points)
    gphys = np.ascontiguousarray((2.0 / h) * grads)
    wdet = np.ascontiguousarray(volume_rule.weights * (0.5 * h) ** 2)
    phys, _ = _element_samples(mesh, volume_rule)
    kv = np.ascontiguousarray(
        np.stack([K.evaluate(e, phys[e]) for e in range(ne)]), dtype=float
    )
    vol = _kernels.volume_blocks(wdet, np.ascontiguousarray(vals), gphys, kv)
    for e in range(ne):
        s = slice(e * nb, (e + 1) * nb)
        N[s, s] += vol[e]

    # (h^nu / p^theta) * h_E * one-sided flux Gram over each element boundary
    jw = np.ascontiguousarray(edge_rule.weights * (0.5 * h))
    bnd_weight = h**params.nu / float(params.p) ** params.theta
    for eid in range(4):
        mu = EDGE_NORMALS[eid]
        ref = edge_reference_points(eid, edge_rule.points)
        ev, eg = eval_basis(basis, ref)
        gn = np.ascontiguousarray((2.0 / h) * (eg @ mu))
        pts = np.stack(
            [mesh.elements[e].affine_map.apply(ref) for e in range(ne)]
        )
        ke = np.ascontiguousarray(
            np.stack([K.evaluate(e, pts[e]) for e in range(ne)]), dtype=float
        )
        blocks = _kernels.flux_gram_blocks(jw, gn, ke)
        for e in range(ne):
            s = slice(e * nb, (e + 1) * nb)
            N[s, s] += bnd_weight * mesh.elements[e].diameter * blocks[e]

    # flux-jump penalty part, identical to the assembled stabilization term
    stab = stabilization_weight(params, h)
    for group_normal in (np.array([-1.0, 0.0]), np.array([0.0, -1.0])):
        group = [
            fc
            for fc in mesh.interior_faces
            if np.array_equal(fc.normal, group_normal)
        ]
        if not group:
            continue
        v_hi, gn_hi = trace_tables(basis, edge_rule, h, group_normal, "hi")
        v_lo, gn_lo = trace_tables(basis, edge_rule, h, group_normal, "lo")
        mids = np.array([fc.midpoint for fc in group])
        half = np.array([0.0, 1.0]) if group_normal[0] != 0.0 else np.array([1.0, 0.0])
        pts = mids[:, None, :] + (0.5 * h) * edge_rule.points[None, :, None] * half
        k_hi = np.ascontiguousarray(
            np.stack([K.evaluate(fc.elem_hi, pts[i]) for i, fc in enumerate(group)]),
            dtype=float,
        )
        k_lo = np.ascontiguousarray(
            np.stack([K.evaluate(fc.elem_lo, pts[i]) for i, fc in enumerate(group)]),
            dtype=float,
        )
        hh, hl, lh, ll = _kernels.stabilization_face_blocks(jw, gn_hi, gn_lo, k_hi, k_lo)
        for i, fc in enumerate(group):
            si = slice(fc.elem_hi * nb, (fc.elem_hi + 1) * nb)
            sj = slice(fc.elem_lo * nb, (fc.elem_lo + 1) * nb)
            N[si, si] += stab * hh[i]
            N[si, sj] += stab * hl[i]
            N[sj, si] += stab * lh[i]
            N[sj, sj] += stab * ll[i]
    return N


def infsup_gamma_from_matrices(A: np.ndarray, N: np.ndarray) -> float:
    """min_u max_v  v^T A u / sqrt(u^T N u * v^T N v) for SPD N.

    Equals the smallest singular value of L^-1 A L^-T with N = L L^T.
    """
    try:
        L = sla.cholesky(N, lower=True)
    except sla.LinAlgError as exc:
        raise RuntimeError(
            "surrogate norm Gram matrix is not positive definite "
            "(norm assembly bug)"
        ) from exc
    Y = sla.solve_triangular(L, A, lower=True)
    M = sla.solve_triangular(L, Y.T, lower=True).T
    return float(sla.svdvals(M)[-1])


def infsup_gamma(mesh: MeshTopology, basis: BasisSet, params: FormParams,
                 K: CoefficientField, *, dense_dof_limit: int = DENSE_DOF_LIMIT) -> float:
    """Discrete inf-sup constant in the surrogate norm (dense eigen path)."""
    from .system import assemble  # local import to avoid a cycle

    ndof = mesh.n_elements * basis.dimension
    if ndof > dense_dof_limit:
        raise ValueError(
            f"inf-sup computation needs dofs <= {dense_dof_limit}, got {ndof}"
        )
    system = assemble(
        mesh, basis, K, lambda x, y: np.zeros_like(x), params
    )
    A = system.matrix.toarray()
    N = surrogate_norm_matrix(mesh, basis, params, K)
    return infsup_gamma_from_matrices(A, N)


# ---------------------------------------------------------------------------
# trace / inverse inequality probes

def inequality_probes(mesh: MeshTopology, basis: BasisSet, samples: int,
                      seed: int = 0, coefficients=None) -> ProbeReport:
    """Empirical maxima of the trace and inverse inequality ratios.

    Random modal polynomials w are drawn with i.i.d. uniform[-1, 1]
    coefficients (or taken from ``coefficients``, one row per sample); per
    sample the three ratios are

      R1 = ||grad w . mu||^2_{L2(dE)} /
             (h_E^-1 ||grad w||^2 + ||grad w|| ||grad^2 w||)
      R2 = (h_E / p^2) ||grad w . mu||^2_{L2(dE)} / ||grad w||^2
      R3 = (h_E / p^2) ||grad w|| / ||w||

    Samples with a vanishing denominator are skipped and counted.
    """
    if coefficients is None and samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    h = mesh.h
    p = basis.degree
    rule = make_volume_rule(p + 3)
    erule = make_edge_rule(p + 3)
    vals, grads, hess = eval_basis_hessians(basis, rule.points)
    w = rule.weights

    if coefficients is None:
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-1.0, 1.0, size=(samples, basis.dimension))
    else:
        coeffs = np.asarray(coefficients, dtype=float)
        samples = coeffs.shape[0]

    # reference integrals, then exact powers of (2/h) from the affine map
    gc = np.einsum("sb,qbi->sqi", coeffs, grads)
    hc = np.einsum("sb,qbi->sqi", coeffs, hess)
    vc = coeffs @ vals.T
    valsq = (0.5 * h) ** 2 * np.sum(w * vc**2, axis=1)
    gradsq = np.sum(w * np.sum(gc**2, axis=-1), axis=1)
    hesssq = (2.0 / h) ** 2 * np.sum(
        w * (hc[:, :, 0] ** 2 + 2.0 * hc[:, :, 1] ** 2 + hc[:, :, 2] ** 2), axis=1
    )
    bndsq = np.zeros(samples)
    for eid in range(4):
        ref = edge_reference_points(eid, erule.points)
        _, eg = eval_basis(basis, ref)
        gn = eg @ EDGE_NORMALS[eid]
        bndsq += np.sum(erule.weights * (coeffs @ gn.T) ** 2, axis=1)
    bndsq *= 2.0 / h  # (h/2) arc jacobian times (2/h)^2 gradient scaling

    h_e = mesh.elements[0].diameter
    elem_for_sample = np.arange(samples) % mesh.n_elements
    diam = np.array([mesh.elements[e].diameter for e in elem_for_sample])
    assert np.allclose(diam, h_e)

    r1_den = gradsq / diam + np.sqrt(gradsq * hesssq)
    r23 = diam / float(p) ** 2
    r1_max = r2_max = r3_max = 0.0
    skipped = 0
    for s in range(samples):
        if valsq[s] <= 0.0:
            skipped += 1
            continue
        r3_max = max(r3_max, r23[s] * math.sqrt(gradsq[s] / valsq[s]))
        if r1_den[s] <= 0.0 or gradsq[s] <= 0.0:
            skipped += 1
            continue
        r1_max = max(r1_max, bndsq[s] / r1_den[s])
        r2_max = max(r2_max, r23[s] * bndsq[s] / gradsq[s])
    return ProbeReport(
        h=h,
        p=p,
        samples=samples,
        skipped=skipped,
        seed=seed,
        r1_max=r1_max,
        r2_max=r2_max,
        r3_max=r3_max,
    )


# ---------------------------------------------------------------------------
# identity checks used by diagnostics and the acceptance suite

def bilinear_moments(mesh: MeshTopology, basis: BasisSet, K: CoefficientField,
                     params: FormParams, field,
                     volume_rule: QuadratureRule, edge_rule: QuadratureRule) -> np.ndarray:
    """The vector B(w, phi_i) for an elementwise field w, all test dofs i."""
    h = mesh.h
    ne, nb = mesh.n_elements, basis.dimension
    out = np.zeros(ne * nb)

    vals, grads = eval_basis(basis, volume_rule.points)
    gphys = (2.0 / h) * grads
    phys, wdet = _element_samples(mesh, volume_rule)
    for e in range(ne):
        wv, wg = field(e, phys[e])
        kq = np.asarray(K.evaluate(e, phys[e]), dtype=float)
        out[e * nb : (e + 1) * nb] = np.einsum(
            "q,qa->a", wdet * wv, vals
        ) + np.einsum("q,qi,qai->a", wdet * kq, wg, gphys)

    stab = stabilization_weight(params, h)
    jw = edge_rule.weights * (0.5 * h)
    for fc in mesh.interior_faces:
        mid = fc.midpoint
        half = 0.5 * (fc.endpoints[1] - fc.endpoints[0])
        pts = mid + np.outer(edge_rule.points, half)
        v_hi, g_hi = field(fc.elem_hi, pts)
        v_lo, g_lo = field(fc.elem_lo, pts)
        k_hi = np.asarray(K.evaluate(fc.elem_hi, pts), dtype=float)
        k_lo = np.asarray(K.evaluate(fc.elem_lo, pts), dtype=float)
        flux_hi = k_hi * (g_hi @ fc.normal)
        flux_lo = k_lo * (g_lo @ fc.normal)
        w_jump = v_hi - v_lo
        flux_avg = 0.5 * (flux_hi + flux_lo)
        flux_jump = flux_hi - flux_lo
        for side, sign, elem in (("hi", 1.0, fc.elem_hi), ("lo", -1.0, fc.elem_lo)):
            tv, tgn = trace_tables(basis, edge_rule, h, fc.normal, side)
            kr = k_hi if side == "hi" else k_lo
            contrib = np.einsum("q,qa->a", jw * w_jump * 0.5 * kr, tgn)
            contrib -= sign * np.einsum("q,qa->a", jw * flux_avg, tv)
            contrib += stab * sign * np.einsum("q,qa->a", jw * flux_jump * kr, tgn)
            out[elem * nb : (elem + 1) * nb] += contrib

    for fc in mesh.boundary_faces:
        mid = fc.midpoint
        half = 0.5 * (fc.endpoints[1] - fc.endpoints[0])
        pts = mid + np.outer(edge_rule.points, half)
        wv, wg = field(fc.elem_hi, pts)
        kq = np.asarray(K.evaluate(fc.elem_hi, pts), dtype=float)
        flux = kq * (wg @ fc.normal)
        tv, tgn = trace_tables(basis, edge_rule, h, fc.normal, "boundary")
        contrib = -np.einsum("q,qa->a", jw * flux, tv)
        contrib += np.einsum("q,qa->a", jw * kq * wv, tgn)
        out[fc.elem_hi * nb : (fc.elem_hi + 1) * nb] += contrib
    return out


def load_moments(mesh: MeshTopology, basis: BasisSet, f,
                 rule: QuadratureRule) -> np.ndarray:
    """The vector L(phi_i) = int f phi_i dx."""
    phys, wdet = _element_samples(mesh, rule)
    vals, _ = eval_basis(basis, rule.points)
    fv = np.ascontiguousarray(
        np.stack(
            [np.asarray(f(phys[e, :, 0], phys[e, :, 1]), dtype=float)
             for e in range(mesh.n_elements)]
        )
    )
    return _kernels.load_vectors(
        np.ascontiguousarray(wdet), np.ascontiguousarray(vals), fv
    ).ravel()


def star_norm_squared(mesh: MeshTopology, basis: BasisSet, K: CoefficientField,
                      coefficients: np.ndarray,
                      volume_rule: QuadratureRule) -> float:
    """Sum over elements of ||K^1/2 grad v||^2 + ||v||^2 for a discrete v."""
    h = mesh.h
    vals, grads = eval_basis(basis, volume_rule.points)
    gphys = (2.0 / h) * grads
    phys, wdet = _element_samples(mesh, volume_rule)
    coeffs = coefficients.reshape(mesh.n_elements, -1)
    v = coeffs @ vals.T
    g = np.einsum("eb,qbi->eqi", coeffs, gphys)
    kv = np.stack([K.evaluate(e, phys[e]) for e in range(mesh.n_elements)])
    return float(np.sum(wdet * (kv * np.sum(g**2, axis=-1) + v**2)))


def flux_jump_norm_squared(mesh: MeshTopology, basis: BasisSet, K: CoefficientField,
                           coefficients: np.ndarray,
                           edge_rule: QuadratureRule) -> float:
    """||[K grad v . n]||^2 over the interior interface, for a discrete v."""
    h = mesh.h
    nb = basis.dimension
    coeffs = coefficients.reshape(mesh.n_elements, nb)
    jw = edge_rule.weights * (0.5 * h)
    total = 0.0
    for fc in mesh.interior_faces:
        mid = fc.midpoint
        half = 0.5 * (fc.endpoints[1] - fc.endpoints[0])
        pts = mid + np.outer(edge_rule.points, half)
        _, gn_hi = trace_tables(basis, edge_rule, h, fc.normal, "hi")
        _, gn_lo = trace_tables(basis, edge_rule, h, fc.normal, "lo")
        k_hi = np.asarray(K.evaluate(fc.elem_hi, pts), dtype=float)
        k_lo = np.asarray(K.evaluate(fc.elem_lo, pts), dtype=float)
        jump = k_hi * (gn_hi @ coeffs[fc.elem_hi]) - k_lo * (gn_lo @ coeffs[fc.elem_lo])
        total += float(np.sum(jw * jump**2))
    return total


def coercivity_defect(system: DGSystem, K: CoefficientField,
                      coefficients: np.ndarray,
                      volume_rule: Optional[QuadratureRule] = None,
                      edge_rule: Optional[QuadratureRule] = None) -> float:
    """Relative defect of B(v,v) = sum_E ||v||_*^2 + stab ||[K grad v . n]||^2.

    The right-hand side is integrated directly from the coefficient vector
    (independently of the assembled matrix); pass the assembly rules to make
    the identity exact up to roundoff.
    """
    q = system.params.p + 3
    volume_rule = volume_rule or make_volume_rule(q)
    edge_rule = edge_rule or make_edge_rule(q)
    lhs = float(coefficients @ (system.matrix @ coefficients))
    star = star_norm_squared(system.mesh, system.basis, K, coefficients, volume_rule)
    jump = stabilization_weight(system.params, system.mesh.h) * flux_jump_norm_squared(
        system.mesh, system.basis, K, coefficients, edge_rule
    )
    return abs(lhs - star - jump) / abs(lhs)


def local_conservation_residuals(system: DGSystem, coefficients: np.ndarray) -> np.ndarray:
    """|B(u_h, 1_E) - L(1_E)| per element, 1_E the unit indicator of E.

    The constant mode has value 1/2, so the indicator is twice the first
    dof of each element block.
    """
    r = system.matrix @ coefficients - system.rhs
    return np.abs(2.0 * r.reshape(system.dof_map.n_elements, -1)[:, 0])
