import math

import numpy as np
import pytest

from fluxdg.analysis import (
    LevelRecord,
    NormWeights,
    bilinear_moments,
    broken_h1_error,
    build_error_report,
    coercivity_defect,
    convergence_rates,
    error_field,
    exact_field,
    inequality_probes,
    infsup_gamma,
    infsup_gamma_from_matrices,
    l2_error,
    solution_field,
    surrogate_norm_matrix,
    triple_norm_surrogate,
)
from fluxdg.forms import FormParams
from fluxdg.mesh import build_uniform_quad_mesh
from fluxdg.refelem import make_basis, make_edge_rule, make_volume_rule
from fluxdg.system import assemble, paper_case, sine_case, solve


@pytest.fixture(scope="module")
def solved_paper_p2():
    case = paper_case()
    mesh = build_uniform_quad_mesh(4)
    basis = make_basis(2)
    params = FormParams(sigma=1.0, p=2)
    system = assemble(mesh, basis, case.coefficient, case.source, params)
    return case, mesh, basis, params, system, solve(system)


def test_l2_error_of_field_against_itself(solved_paper_p2):
    case, mesh, basis, params, system, u_h = solved_paper_p2

    def uh_as_exact(x, y):
        return u_h.evaluate(np.stack([x.ravel(), y.ravel()], axis=-1))[0].reshape(x.shape)

    assert l2_error(u_h, uh_as_exact) <= 1e-14


def test_broken_h1_constant_error_field(solved_paper_p2):
    case, mesh, basis, params, system, u_h = solved_paper_p2
    shift = 0.37

    def exact(x, y):
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return u_h.evaluate(pts)[0].reshape(x.shape) + shift

    def exact_grad(x, y):
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return u_h.evaluate(pts)[1].reshape(x.shape + (2,))

    assert broken_h1_error(u_h, exact, exact_grad) == pytest.approx(shift, rel=1e-12)


def test_convergence_rate_examples():
    assert convergence_rates([0.04, 0.01]) == [pytest.approx(2.0)]
    assert convergence_rates([8e-3, 1e-3]) == [pytest.approx(3.0)]
    assert convergence_rates([0.5, 0.5]) == [pytest.approx(0.0)]


def test_convergence_rates_undefined_cases():
    assert convergence_rates([0.1, 0.0]) == [None]
    assert convergence_rates([float("nan"), 0.1]) == [None]
    assert convergence_rates([0.1, float("inf")]) == [None]
    # exactness regime: solver-noise errors give no meaningful ratio
    assert convergence_rates([3e-15, 8e-16]) == [None]
    assert convergence_rates([1e-4, 1e-5, 1e-15]) == [pytest.approx(math.log2(10)), None]


def test_rates_are_scale_invariant():
    errors = [0.3, 0.08, 0.021]
    base = convergence_rates(errors)
    scaled = convergence_rates([17.0 * e for e in errors])
    assert scaled == pytest.approx(base)


def test_error_report_requires_doubled_levels():
    rec = lambda n: LevelRecord(n=n, h=1.0 / n, dofs=n * n, l2_error=1.0 / n**2,
                                h1_error=1.0 / n, triple_error=1.0 / n)
    report = build_error_report("paper", 2, [rec(4), rec(8), rec(16)])
    assert report.beta_l2 == (pytest.approx(2.0), pytest.approx(2.0))
    with pytest.raises(ValueError, match="halve"):
        build_error_report("paper", 2, [rec(4), rec(6)])


def test_triple_surrogate_zero_field(solved_paper_p2):
    case, mesh, basis, params, system, u_h = solved_paper_p2
    weights = NormWeights.from_params(params, mesh.h)

    def zero(elem, pts):
        return np.zeros(pts.shape[0]), np.zeros((pts.shape[0], 2))

    assert triple_norm_surrogate(mesh, case.coefficient, zero, weights) == 0.0


def test_triple_surrogate_smooth_field_has_no_jump_term():
    # K and grad u are continuous for the sine case, so the penalty term
    # vanishes and the surrogate must not depend on sigma
    case = sine_case()
    mesh = build_uniform_quad_mesh(3)
    w1 = NormWeights.from_params(FormParams(sigma=1.0, p=2), mesh.h)
    w2 = NormWeights.from_params(FormParams(sigma=50.0, p=2), mesh.h)
    field = exact_field(case)
    a = triple_norm_surrogate(mesh, case.coefficient, field, w1)
    b = triple_norm_surrogate(mesh, case.coefficient, field, w2)
    assert a == pytest.approx(b, rel=1e-12)
    assert a > 0


def test_triple_surrogate_dominates_star_norm(solved_paper_p2):
    from fluxdg.analysis import star_norm_squared

    case, mesh, basis, params, system, u_h = solved_paper_p2
    weights = NormWeights.from_params(params, mesh.h)
    rule = make_volume_rule(params.p + 5)
    triple = triple_norm_surrogate(
        mesh, case.coefficient, solution_field(u_h), weights,
        volume_rule=rule, edge_rule=make_edge_rule(params.p + 5),
    )
    star = star_norm_squared(mesh, basis, case.coefficient, u_h.coefficients, rule)
    assert triple**2 >= star * (1 - 1e-12)


def test_triple_surrogate_matches_norm_gram_matrix(solved_paper_p2):
    case, mesh, basis, params, system, u_h = solved_paper_p2
    weights = NormWeights.from_params(params, mesh.h)
    vol = make_volume_rule(params.p + 3)
    edge = make_edge_rule(params.p + 3)
    N = surrogate_norm_matrix(mesh, basis, params, case.coefficient, vol, edge)
    rng = np.random.default_rng(4)
    v = rng.uniform(-1.0, 1.0, N.shape[0])
    from fluxdg.system import SolutionField

    vf = SolutionField(mesh=mesh, basis=basis, coefficients=v)
    direct = triple_norm_surrogate(
        mesh, case.coefficient, solution_field(vf), weights,
        volume_rule=vol, edge_rule=edge,
    )
    assert direct**2 == pytest.approx(v @ N @ v, rel=1e-12)


def test_infsup_gamma_positive_and_h_stable():
    case = paper_case()
    params = FormParams(sigma=1.0, nu=1.0, theta=2.0, p=2)
    gammas = {}
    for n in (2, 4):
        mesh = build_uniform_quad_mesh(n)
        gammas[n] = infsup_gamma(mesh, make_basis(2), params, case.coefficient)
        assert gammas[n] > 0
    assert 0.5 <= gammas[4] / gammas[2] <= 2.0


def test_infsup_gamma_homogeneity():
    case = paper_case()
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    params = FormParams(sigma=1.0, p=2)
    system = assemble(mesh, basis, case.coefficient,
                      lambda x, y: np.zeros_like(x), params)
    A = system.matrix.toarray()
    N = surrogate_norm_matrix(mesh, basis, params, case.coefficient)
    g1 = infsup_gamma_from_matrices(A, N)
    g2 = infsup_gamma_from_matrices(2.0 * A, N)
    assert g2 == pytest.approx(2.0 * g1, rel=1e-12)


def test_infsup_gamma_invariant_under_orthogonal_rebasing():
    case = paper_case()
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(1)
    params = FormParams(sigma=1.0, p=1)
    system = assemble(mesh, basis, case.coefficient,
                      lambda x, y: np.zeros_like(x), params)
    A = system.matrix.toarray()
    N = surrogate_norm_matrix(mesh, basis, params, case.coefficient)
    rng = np.random.default_rng(8)
    Q, _ = np.linalg.qr(rng.standard_normal(A.shape))
    g = infsup_gamma_from_matrices(A, N)
    g_rebased = infsup_gamma_from_matrices(Q.T @ A @ Q, Q.T @ N @ Q)
    assert g_rebased == pytest.approx(g, rel=1e-8)


def test_infsup_rejects_indefinite_norm_matrix():
    A = np.eye(3)
    N = np.diag([1.0, -1.0, 1.0])
    with pytest.raises(RuntimeError, match="positive definite"):
        infsup_gamma_from_matrices(A, N)


def test_infsup_dense_dof_limit():
    case = paper_case()
    mesh = build_uniform_quad_mesh(16)
    with pytest.raises(ValueError, match="dofs"):
        infsup_gamma(mesh, make_basis(4), FormParams(sigma=1.0, p=4), case.coefficient)


def test_probes_require_enough_samples():
    mesh = build_uniform_quad_mesh(2)
    with pytest.raises(ValueError, match="samples"):
        inequality_probes(mesh, make_basis(2), samples=10)


def test_probe_ratio_for_linear_polynomials_is_closed_form():
    # for linear w: hessian = 0 and R1 = 2 sqrt(2) independent of the slope,
    # since the boundary integral is 2h|g|^2 and h_E^-1 ||grad w||^2
    # = |g|^2 h^2 / (sqrt(2) h)
    mesh = build_uniform_quad_mesh(4)
    basis = make_basis(1)
    rng = np.random.default_rng(0)
    coeffs = np.zeros((100, basis.dimension))
    coeffs[:, 1:] = rng.uniform(-1, 1, size=(100, basis.dimension - 1))
    report = inequality_probes(mesh, basis, samples=100, coefficients=coeffs)
    assert report.r1_max == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
    assert report.skipped == 0


def test_probes_skip_degenerate_samples():
    mesh = build_uniform_quad_mesh(2)
    basis = make_basis(2)
    coeffs = np.zeros((3, basis.dimension))
    coeffs[1, 0] = 1.0  # constant: gradient denominators vanish
    coeffs[2] = np.arange(basis.dimension) + 1.0
    report = inequality_probes(mesh, basis, samples=3, coefficients=coeffs)
    assert report.skipped == 2  # the zero row and the constant row
    assert report.r1_max > 0


def test_probe_maxima_are_h_independent():
    basis = make_basis(3)
    maxima = []
    for i, n in enumerate((2, 4, 8)):
        mesh = build_uniform_quad_mesh(n)
        report = inequality_probes(mesh, basis, samples=150, seed=100 + i)
        maxima.append(report.r1_max)
    assert max(maxima) / min(maxima) < 2.0


def test_bilinear_moments_match_assembled_matrix(solved_paper_p2):
    # B(w, phi_i) evaluated through the field path must agree with A @ w for
    # discrete w when both use the assembly quadrature
    case, mesh, basis, params, system, u_h = solved_paper_p2
    vol = make_volume_rule(params.p + 3)
    edge = make_edge_rule(params.p + 3)
    rng = np.random.default_rng(21)
    w = rng.uniform(-1.0, 1.0, system.dof_map.total_dofs)
    from fluxdg.system import SolutionField

    wf = SolutionField(mesh=mesh, basis=basis, coefficients=w)
    moments = bilinear_moments(
        mesh, basis, case.coefficient, params, solution_field(wf), vol, edge
    )
    direct = system.matrix @ w
    scale = np.abs(direct).max()
    assert np.abs(moments - direct).max() <= 1e-12 * scale


def test_coercivity_defect_is_tiny(solved_paper_p2):
    case, mesh, basis, params, system, u_h = solved_paper_p2
    rng = np.random.default_rng(12)
    v = rng.uniform(-1.0, 1.0, system.dof_map.total_dofs)
    assert coercivity_defect(system, case.coefficient, v) <= 1e-12


def test_norm_weights_mirror_params():
    params = FormParams(sigma=2.0, lam=1.0, zeta=2.0, nu=0.5, theta=1.5, p=3)
    w = NormWeights.from_params(params, h=0.125)
    assert (w.sigma, w.lam, w.zeta, w.nu, w.theta, w.p, w.h) == (
        2.0, 1.0, 2.0, 0.5, 1.5, 3, 0.125,
    )
