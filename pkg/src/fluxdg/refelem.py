"""Reference-element ingredients: modal polynomial bases and Gauss quadrature.

The reference element is the square ``[-1, 1]^2`` and the reference edge the
interval ``[-1, 1]``.  The basis spans the total-degree-``p`` polynomials and
is L2-orthonormal on the reference square: it is the Gram-Schmidt
orthonormalization of the monomials in graded-lexicographic order, which on
the symmetric square works out to normalized Legendre products
``sqrt((2a+1)/2) * sqrt((2b+1)/2) * P_a(x) * P_b(y)`` with ``a + b <= p``.
Evaluation therefore goes through stable Legendre recurrences instead of a
numerically fragile Gram matrix factorization.
"""

from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 8

_REF_COORD_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference square or reference edge.

    ``points`` has shape (nq, 2) for a volume rule and (nq,) for an edge
    rule; ``exact_degree`` is the largest per-direction monomial degree the
    rule integrates exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def num_points(self) -> int:
        return self.weights.shape[0]

    @property
    def is_edge_rule(self) -> bool:
        return self.points.ndim == 1


@dataclass(frozen=True)
class BasisSet:
    """Orthonormal modal basis of total degree <= ``degree``.

    ``modes[k] = (a, b)`` are the Legendre indices of mode k, ordered by
    total degree and then by descending x-index; mode 0 is the constant
    with value 1/2 everywhere.
    """

    degree: int
    modes: np.ndarray

    @property
    def dimension(self) -> int:
        return self.modes.shape[0]


def make_basis(p: int) -> BasisSet:
    """Build the orthonormal total-degree-``p`` modal basis, 1 <= p <= 8."""
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise ValueError(f"polynomial degree must be an integer, got {p!r}")
    if p < 1 or p > MAX_DEGREE:
        raise ValueError(f"polynomial degree must be in [1, {MAX_DEGREE}], got {p}")
    modes = [(a, d - a) for d in range(p + 1) for a in range(d, -1, -1)]
    return BasisSet(degree=int(p), modes=np.array(modes, dtype=np.int64))


def make_volume_rule(q: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with ``q`` points per direction."""
    if q < 1:
        raise ValueError(f"quadrature order must be >= 1, got {q}")
    x, w = np.polynomial.legendre.leggauss(q)
    points = np.column_stack([np.tile(x, q), np.repeat(x, q)])
    weights = np.repeat(w, q) * np.tile(w, q)
    return QuadratureRule(points=points, weights=weights, exact_degree=2 * q - 1)


def make_edge_rule(q: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``q`` points on the reference edge."""
    if q < 1:
        raise ValueError(f"quadrature order must be >= 1, got {q}")
    x, w = np.polynomial.legendre.leggauss(q)
    return QuadratureRule(points=x, weights=w, exact_degree=2 * q - 1)


def _legendre_tables(x: np.ndarray, n: int, order: int = 1):
    """Values and derivatives of P_0..P_n at ``x`` via three-term recurrences.

    Returns ``order + 1`` arrays of shape (len(x), n + 1).
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    vals = np.empty((m, n + 1))
    vals[:, 0] = 1.0
    if n >= 1:
        vals[:, 1] = x
    for k in range(1, n):
        vals[:, k + 1] = ((2 * k + 1) * x * vals[:, k] - k * vals[:, k - 1]) / (k + 1)
    out = [vals]
    prev = vals
    for _ in range(order):
        # D^m P_{k+1} = D^m P_{k-1} + (2k+1) D^{m-1} P_k, with D^m P_j = 0
        # for j <= m - 1 (so the k = 0 step reads an implicit zero).
        der = np.zeros_like(vals)
        for k in range(n):
            lower = der[:, k - 1] if k >= 1 else 0.0
            der[:, k + 1] = lower + (2 * k + 1) * prev[:, k]
        out.append(der)
        prev = der
    return out


def _check_inside_reference(points: np.ndarray) -> None:
    if np.any(np.abs(points) > 1.0 + _REF_COORD_TOL):
        worst = float(np.max(np.abs(points)))
        raise ValueError(
            f"point outside the reference square: max |coord| = {worst:.17g}"
        )


def eval_basis(basis: BasisSet, points: np.ndarray):
    """Tabulate values and reference gradients at reference points.

    ``points`` has shape (nq, 2); returns ``values`` of shape (nq, nb) and
    ``gradients`` of shape (nq, nb, 2).
    """
    points = np.asarray(points, dtype=float)
    _check_inside_reference(points)
    a = basis.modes[:, 0]
    b = basis.modes[:, 1]
    px, dpx = _legendre_tables(points[:, 0], basis.degree, order=1)
    py, dpy = _legendre_tables(points[:, 1], basis.degree, order=1)
    scale = _normalizers(basis.degree)
    fx, fy = scale[a], scale[b]
    values = fx * fy * px[:, a] * py[:, b]
    gradients = np.empty(values.shape + (2,))
    gradients[:, :, 0] = fx * fy * dpx[:, a] * py[:, b]
    gradients[:, :, 1] = fx * fy * px[:, a] * dpy[:, b]
    return values, gradients


def eval_basis_hessians(basis: BasisSet, points: np.ndarray):
    """Like :func:`eval_basis` but also returns second derivatives.

    The extra array has shape (nq, nb, 3) with columns (d2/dx2, d2/dxdy,
    d2/dy2); used by the trace/inverse-inequality probes.
    """
    points = np.asarray(points, dtype=float)
    _check_inside_reference(points)
    a = basis.modes[:, 0]
    b = basis.modes[:, 1]
    px, dpx, ddpx = _legendre_tables(points[:, 0], basis.degree, order=2)
    py, dpy, ddpy = _legendre_tables(points[:, 1], basis.degree, order=2)
    scale = _normalizers(basis.degree)
    fx, fy = scale[a], scale[b]
    values = fx * fy * px[:, a] * py[:, b]
    gradients = np.empty(values.shape + (2,))
    gradients[:, :, 0] = fx * fy * dpx[:, a] * py[:, b]
    gradients[:, :, 1] = fx * fy * px[:, a] * dpy[:, b]
    hessians = np.empty(values.shape + (3,))
    hessians[:, :, 0] = fx * fy * ddpx[:, a] * py[:, b]
    hessians[:, :, 1] = fx * fy * dpx[:, a] * dpy[:, b]
    hessians[:, :, 2] = fx * fy * px[:, a] * ddpy[:, b]
    return values, gradients, hessians


def _normalizers(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return np.sqrt((2 * k + 1) / 2.0)
