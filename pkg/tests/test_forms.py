import numpy as np
import pytest

from direct_oracle import (
    assemble_direct,
    boundary_term_direct,
    face_terms_direct,
    load_direct,
)
from fluxdg import _kernels
from fluxdg.forms import (
    CoefficientField,
    FormEvaluationError,
    FormParams,
    boundary_face_kernel,
    interior_face_kernel,
    load_kernel,
    stabilization_weight,
    trace_tables,
    volume_kernel,
)
from fluxdg.mesh import build_uniform_quad_mesh
from fluxdg.refelem import eval_basis, make_basis, make_edge_rule, make_volume_rule
from fluxdg.system import assemble, paper_case

K_ONE = CoefficientField.constant(1.0)
K_XY = CoefficientField.from_xy(lambda x, y: x * y, 0.0, 1.0)


def params_for(p, sigma=1.0, lam=1.0, zeta=2.0):
    return FormParams(sigma=sigma, lam=lam, zeta=zeta, nu=1.0, theta=2.0, p=p)


def test_form_params_validation():
    with pytest.raises(ValueError):
        FormParams(sigma=0.0, p=2)
    with pytest.raises(ValueError):
        FormParams(sigma=1.0, lam=-0.5, p=2)
    with pytest.raises(ValueError):
        FormParams(sigma=1.0, p=0)
    # boundary values are legal
    FormParams(sigma=1e-8, lam=0.0, zeta=0.0, nu=0.0, theta=0.0, p=1)


def test_volume_kernel_constant_mode_gives_mass_only():
    mesh = build_uniform_quad_mesh(1)
    basis = make_basis(1)
    rule = make_volume_rule(4)
    block = volume_kernel(mesh.elements[0], basis, rule, K_ONE).matrix
    # gradient of the constant mode vanishes, so its column is pure mass;
    # the reference-orthonormal basis gives int_E phi_a phi_0 = detJ * delta_a0
    expected = np.zeros(basis.dimension)
    expected[0] = mesh.elements[0].affine_map.det
    assert np.abs(block[:, 0] - expected).max() <= 1e-14
    assert np.abs(block[0, :] - expected).max() <= 1e-14


def test_volume_kernel_symmetry():
    mesh = build_uniform_quad_mesh(4)
    basis = make_basis(3)
    rule = make_volume_rule(6)
    block = volume_kernel(mesh.elements[9], basis, rule, K_XY).matrix
    assert np.abs(block - block.T).max() <= 1e-14


def test_volume_kernel_positive_definite():
    # element [0.5, 0.75]^2 of the n=4 mesh is row 2, column 2
    mesh = build_uniform_quad_mesh(4)
    element = mesh.elements[2 * 4 + 2]
    assert np.allclose(element.vertices[0], [0.5, 0.5])
    basis = make_basis(2)
    block = volume_kernel(element, basis, make_volume_rule(5), K_XY).matrix
    eigenvalues = np.linalg.eigvalsh(0.5 * (block + block.T))
    assert eigenvalues.min() > 0


def test_volume_kernel_rejects_nonpositive_coefficient():
    mesh = build_uniform_quad_mesh(4)
    bad = CoefficientField.from_xy(lambda x, y: x - 0.5, -0.5, 0.5)
    with pytest.raises(FormEvaluationError, match="positivity"):
        volume_kernel(mesh.elements[0], make_basis(2), make_volume_rule(5), bad)


def project_linear(mesh, basis, elem, a, b, c):
    """Coefficients of a + b x + c y on one element (exact for p >= 1)."""
    rule = make_volume_rule(basis.degree + 2)
    vals, _ = eval_basis(basis, rule.points)
    phys = mesh.elements[elem].affine_map.apply(rule.points)
    f = a + b * phys[:, 0] + c * phys[:, 1]
    # orthonormal reference basis: coefficients are reference L2 moments
    return np.einsum("q,qa->a", rule.weights * f, vals)


def assemble_face_blocks(kernel_blocks, nb):
    out = np.zeros((2 * nb, 2 * nb))
    hh, hl, lh, ll = kernel_blocks
    out[:nb, :nb] = hh.matrix
    out[:nb, nb:] = hl.matrix
    out[nb:, :nb] = lh.matrix
    out[nb:, nb:] = ll.matrix
    return out


def test_interior_face_vanishes_for_conforming_functions():
    # globally linear u, v have matching traces and, with the continuous
    # K = xy, matching fluxes: every face term must cancel
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(1)
    rule = make_edge_rule(5)
    face = mesh.interior_faces[0]
    blocks = assemble_face_blocks(
        interior_face_kernel(mesh, face, basis, rule, K_XY, params_for(1)),
        basis.dimension,
    )
    cu = np.concatenate(
        [
            project_linear(mesh, basis, face.elem_hi, 0.3, 1.2, -0.7),
            project_linear(mesh, basis, face.elem_lo, 0.3, 1.2, -0.7),
        ]
    )
    cv = np.concatenate(
        [
            project_linear(mesh, basis, face.elem_hi, -1.0, 0.4, 2.0),
            project_linear(mesh, basis, face.elem_lo, -1.0, 0.4, 2.0),
        ]
    )
    assert abs(cv @ blocks @ cu) <= 1e-13


def test_interior_face_diagonal_reduces_to_penalty():
    # at u = v the skew terms cancel pairwise, leaving the flux-jump penalty
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    rule = make_edge_rule(6)
    params = params_for(2, sigma=1.3)
    face = mesh.interior_faces[1]
    blocks = assemble_face_blocks(
        interior_face_kernel(mesh, face, basis, rule, K_XY, params),
        basis.dimension,
    )
    rng = np.random.default_rng(11)
    c = rng.standard_normal(2 * basis.dimension)
    quad = c @ blocks @ c

    # direct quadrature of the jump integral
    h = mesh.h
    _, gn_hi = trace_tables(basis, rule, h, face.normal, "hi")
    _, gn_lo = trace_tables(basis, rule, h, face.normal, "lo")
    mid = face.midpoint
    half = 0.5 * (face.endpoints[1] - face.endpoints[0])
    pts = mid + np.outer(rule.points, half)
    k = K_XY.evaluate(0, pts)
    nb = basis.dimension
    jump = k * (gn_hi @ c[:nb]) - k * (gn_lo @ c[nb:])
    expected = stabilization_weight(params, h) * np.sum(
        rule.weights * 0.5 * face.length * jump**2
    )
    assert quad == pytest.approx(expected, rel=1e-12)


def test_interior_face_blocks_match_direct_oracle():
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(1)
    params = params_for(1, sigma=1.0, lam=0.0, zeta=0.0)
    face = mesh.interior_faces[0]
    blocks = assemble_face_blocks(
        interior_face_kernel(mesh, face, basis, make_edge_rule(4), K_ONE, params),
        basis.dimension,
    )
    oracle = face_terms_direct(mesh, basis, K_ONE, params, face, nq=4)
    assert np.abs(blocks - oracle).max() <= 1e-12


def test_interior_face_kernel_input_validation():
    mesh = build_uniform_quad_mesh(2)
    with pytest.raises(ValueError, match="interior"):
        interior_face_kernel(
            mesh, mesh.boundary_faces[0], make_basis(1), make_edge_rule(3),
            K_ONE, params_for(1),
        )


def test_boundary_face_kernel_antisymmetric():
    mesh = build_uniform_quad_mesh(3)
    basis = make_basis(2)
    for face in mesh.boundary_faces[:4]:
        block = boundary_face_kernel(mesh, face, basis, make_edge_rule(5), K_XY).matrix
        assert np.abs(block + block.T).max() <= 1e-14


def test_boundary_face_constant_trial_column_is_flux_integral():
    # for trial u = constant mode, grad u = 0, so only + int u K grad v . mu
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    rule = make_edge_rule(5)
    face = mesh.boundary_faces[0]
    block = boundary_face_kernel(mesh, face, basis, rule, K_XY).matrix
    v, gn = trace_tables(basis, rule, mesh.h, face.normal, "boundary")
    mid = face.midpoint
    half = 0.5 * (face.endpoints[1] - face.endpoints[0])
    pts = mid + np.outer(rule.points, half)
    k = K_XY.evaluate(face.elem_hi, pts)
    jw = rule.weights * 0.5 * face.length
    expected = 0.5 * np.einsum("q,qa->a", jw * k, gn)  # constant mode value 1/2
    assert np.abs(block[:, 0] - expected).max() <= 1e-14


def test_boundary_face_block_matches_direct_oracle():
    mesh = build_uniform_quad_mesh(1)
    basis = make_basis(1)
    face = mesh.boundary_faces[0]  # bottom edge of the unit square
    block = boundary_face_kernel(mesh, face, basis, make_edge_rule(4), K_ONE).matrix
    oracle = boundary_term_direct(mesh, basis, K_ONE, face, nq=4)
    assert np.abs(block - oracle).max() <= 1e-13


def test_load_kernel_zero_and_constant():
    mesh = build_uniform_quad_mesh(4)
    basis = make_basis(2)
    rule = make_volume_rule(5)
    element = mesh.elements[7]
    zero = load_kernel(element, basis, rule, lambda x, y: np.zeros_like(x))
    assert np.abs(zero).max() == 0.0
    one = load_kernel(element, basis, rule, lambda x, y: np.ones_like(x))
    area = 4.0 * element.affine_map.det
    expected = np.zeros(basis.dimension)
    expected[0] = area * 0.5  # constant mode value
    assert np.abs(one - expected).max() <= 1e-15


def test_load_kernel_matches_direct_oracle_for_paper_source():
    mesh = build_uniform_quad_mesh(4)
    basis = make_basis(2)
    case = paper_case()
    vec = load_kernel(mesh.elements[0], basis, make_volume_rule(7), case.source)
    oracle = load_direct(mesh, basis, case.source, element=0, nq=7)
    assert np.abs(vec - oracle).max() <= 1e-14


@pytest.mark.parametrize("K", [K_ONE, K_XY], ids=["K=1", "K=xy"])
def test_global_matrix_matches_direct_oracle_p1(K):
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(1)
    params = params_for(1)
    system = assemble(mesh, basis, K, lambda x, y: np.zeros_like(x), params)
    oracle = assemble_direct(mesh, basis, K, params)
    assert np.abs(system.matrix.toarray() - oracle).max() <= 1e-12


def test_global_coercivity_identity():
    from fluxdg.analysis import coercivity_defect

    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    params = params_for(2)
    system = assemble(mesh, basis, K_XY, lambda x, y: np.zeros_like(x), params)
    rng = np.random.default_rng(5)
    for _ in range(5):
        v = rng.uniform(-1, 1, system.dof_map.total_dofs)
        assert coercivity_defect(system, K_XY, v) <= 1e-12


def test_skew_structure_of_first_order_terms():
    # B(u,v) + B(v,u) = 2 (volume + penalty) because the remaining face and
    # boundary terms are globally antisymmetric
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    params = params_for(2, sigma=0.8)
    system = assemble(mesh, basis, K_XY, lambda x, y: np.zeros_like(x), params)
    A = system.matrix.toarray()

    nb = basis.dimension
    sym = np.zeros_like(A)
    vol_rule = make_volume_rule(params.p + 3)
    edge_rule = make_edge_rule(params.p + 3)
    for e, element in enumerate(mesh.elements):
        sym[e * nb : (e + 1) * nb, e * nb : (e + 1) * nb] += volume_kernel(
            element, basis, vol_rule, K_XY
        ).matrix
    stab = stabilization_weight(params, mesh.h)
    jw = np.ascontiguousarray(edge_rule.weights * 0.5 * mesh.h)
    for fc in mesh.interior_faces:
        _, gn_hi = trace_tables(basis, edge_rule, mesh.h, fc.normal, "hi")
        _, gn_lo = trace_tables(basis, edge_rule, mesh.h, fc.normal, "lo")
        mid = fc.midpoint
        half = 0.5 * (fc.endpoints[1] - fc.endpoints[0])
        pts = mid + np.outer(edge_rule.points, half)
        kq = np.atleast_2d(K_XY.evaluate(fc.elem_hi, pts))
        hh, hl, lh, ll = _kernels.stabilization_face_blocks(jw, gn_hi, gn_lo, kq, kq)
        i, j = fc.elem_hi, fc.elem_lo
        sym[i * nb : (i + 1) * nb, i * nb : (i + 1) * nb] += stab * hh[0]
        sym[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] += stab * hl[0]
        sym[j * nb : (j + 1) * nb, i * nb : (i + 1) * nb] += stab * lh[0]
        sym[j * nb : (j + 1) * nb, j * nb : (j + 1) * nb] += stab * ll[0]
    scale = np.abs(A).max()
    assert np.abs(A + A.T - 2.0 * sym).max() <= 1e-12 * scale


def test_consistency_for_polynomial_solution():
    # the paper's quartic vanishes on the whole boundary, so with f built
    # from it B(u, v_h) = L(v_h) must hold for every discrete test function
    from fluxdg.analysis import bilinear_moments, exact_field, load_moments

    case = paper_case()
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(4)
    params = params_for(4)
    vol = make_volume_rule(params.p + 5)
    edge = make_edge_rule(params.p + 5)
    lhs = bilinear_moments(mesh, basis, case.coefficient, params, exact_field(case), vol, edge)
    rhs = load_moments(mesh, basis, case.source, vol)
    assert np.abs(lhs - rhs).max() <= 1e-10
