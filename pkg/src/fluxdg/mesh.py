"""Structured affine meshes of the unit square with DG face conventions.

Elements are axis-aligned squares indexed row-major from the bottom-left
corner; element ``iy * n + ix`` occupies ``[ix*h, (ix+1)*h] x [iy*h,
(iy+1)*h]`` with ``h = 1/n``.  Each element is the image of the reference
square ``[-1, 1]^2`` under an affine map with linear part ``(h/2) * I``.

Interior faces store the two adjacent element indices with ``elem_hi >
elem_lo`` and carry the unit normal pointing *out of the higher-indexed
element* (so it points from ``elem_hi`` into ``elem_lo``).  Jump and average
operators downstream are signed by this convention: ``[v] = v|hi - v|lo``.
Boundary faces carry the outward normal of the domain.
"""

from dataclasses import dataclass

import numpy as np

from .refelem import QuadratureRule

# Local edges of the reference square in the order bottom, right, top, left,
# with their outward reference normals.
EDGE_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class AffineMap:
    """Map x = translation + linear @ x_ref from [-1,1]^2 onto an element."""

    translation: np.ndarray
    linear: np.ndarray
    det: float

    def apply(self, ref_points: np.ndarray) -> np.ndarray:
        return self.translation + np.asarray(ref_points, dtype=float) @ self.linear.T

    def invert(self, phys_points: np.ndarray) -> np.ndarray:
        shifted = np.asarray(phys_points, dtype=float) - self.translation
        return shifted @ np.linalg.inv(self.linear).T


@dataclass(frozen=True)
class Element:
    index: int
    vertices: np.ndarray  # (4, 2), counter-clockwise from the bottom-left
    affine_map: AffineMap
    diameter: float  # h_E, the cell diagonal


@dataclass(frozen=True)
class Face:
    kind: str  # "interior" | "boundary"
    elem_hi: int
    elem_lo: int | None
    normal: np.ndarray
    length: float
    endpoints: np.ndarray  # (2, 2)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.endpoints[0] + self.endpoints[1])


@dataclass(frozen=True)
class FaceTrace:
    """Paired quadrature points of a face seen from its adjacent elements.

    The k-th entries of ``ref_hi`` and ``ref_lo`` map to the same physical
    point ``phys[k]``; ``arc_jacobian`` is ds/dt for the [-1,1] face
    parameter (= length / 2).
    """

    phys: np.ndarray
    ref_hi: np.ndarray
    ref_lo: np.ndarray | None
    arc_jacobian: float


@dataclass(frozen=True)
class MeshTopology:
    n_per_side: int
    elements: list
    interior_faces: list
    boundary_faces: list
    h: float

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_centers(self) -> np.ndarray:
        return np.array([e.affine_map.translation for e in self.elements])


def build_uniform_quad_mesh(n_per_side: int) -> MeshTopology:
    """Build the uniform n x n quad mesh of the unit square."""
    if not isinstance(n_per_side, (int, np.integer)) or isinstance(n_per_side, bool):
        raise ValueError(f"n_per_side must be an integer, got {n_per_side!r}")
    n = int(n_per_side)
    if n < 1:
        raise ValueError(f"n_per_side must be >= 1, got {n}")
    h = 1.0 / n
    linear = 0.5 * h * np.eye(2)
    det = (0.5 * h) ** 2
    diameter = float(np.hypot(h, h))

    elements = []
    for iy in range(n):
        for ix in range(n):
            x0, y0 = ix * h, iy * h
            x1, y1 = (ix + 1) * h, (iy + 1) * h
            vertices = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
            center = np.array([0.5 * (x0 + x1), 0.5 * (y0 + y1)])
            amap = AffineMap(translation=center, linear=linear, det=det)
            elements.append(
                Element(
                    index=iy * n + ix,
                    vertices=vertices,
                    affine_map=amap,
                    diameter=diameter,
                )
            )

    interior = []
    # Vertical faces: the right neighbor has the higher row-major index, so
    # the normal points in -x (out of the right element, into the left one).
    for iy in range(n):
        for ix in range(n - 1):
            lo = iy * n + ix
            hi = iy * n + ix + 1
            x = (ix + 1) * h
            endpoints = np.array([[x, iy * h], [x, (iy + 1) * h]])
            interior.append(
                Face(
                    kind="interior",
                    elem_hi=hi,
                    elem_lo=lo,
                    normal=np.array([-1.0, 0.0]),
                    length=h,
                    endpoints=endpoints,
                )
            )
    # Horizontal faces: the top neighbor has the higher index, normal -y.
    for iy in range(n - 1):
        for ix in range(n):
            lo = iy * n + ix
            hi = (iy + 1) * n + ix
            y = (iy + 1) * h
            endpoints = np.array([[ix * h, y], [(ix + 1) * h, y]])
            interior.append(
                Face(
                    kind="interior",
                    elem_hi=hi,
                    elem_lo=lo,
                    normal=np.array([0.0, -1.0]),
                    length=h,
                    endpoints=endpoints,
                )
            )

    boundary = []
    for ix in range(n):  # bottom, left to right
        e = ix
        endpoints = np.array([[ix * h, 0.0], [(ix + 1) * h, 0.0]])
        boundary.append(_boundary_face(e, np.array([0.0, -1.0]), h, endpoints))
    for iy in range(n):  # right, bottom to top
        e = iy * n + (n - 1)
        endpoints = np.array([[1.0, iy * h], [1.0, (iy + 1) * h]])
        boundary.append(_boundary_face(e, np.array([1.0, 0.0]), h, endpoints))
    for ix in range(n):  # top, left to right
        e = (n - 1) * n + ix
        endpoints = np.array([[ix * h, 1.0], [(ix + 1) * h, 1.0]])
        boundary.append(_boundary_face(e, np.array([0.0, 1.0]), h, endpoints))
    for iy in range(n):  # left, bottom to top
        e = iy * n
        endpoints = np.array([[0.0, iy * h], [0.0, (iy + 1) * h]])
        boundary.append(_boundary_face(e, np.array([-1.0, 0.0]), h, endpoints))

    return MeshTopology(
        n_per_side=n,
        elements=elements,
        interior_faces=interior,
        boundary_faces=boundary,
        h=h,
    )


def _boundary_face(elem: int, normal: np.ndarray, h: float, endpoints: np.ndarray) -> Face:
    return Face(
        kind="boundary",
        elem_hi=elem,
        elem_lo=None,
        normal=normal,
        length=h,
        endpoints=endpoints,
    )


def face_trace_points(mesh: MeshTopology, face: Face, rule: QuadratureRule) -> FaceTrace:
    """Map an edge rule onto a face and pull it back into both elements.

    Raises ValueError when the rule is not an edge rule or the face geometry
    does not line up with the mesh (wrong element indices, endpoints not on
    the element boundary).
    """
    if not rule.is_edge_rule:
        raise ValueError("face_trace_points requires an edge rule")
    t = rule.points
    mid = face.midpoint
    half = 0.5 * (face.endpoints[1] - face.endpoints[0])
    phys = mid + np.outer(t, half)

    ref_hi = _pullback_onto_boundary(mesh, face.elem_hi, phys)
    ref_lo = None
    if face.kind == "interior":
        ref_lo = _pullback_onto_boundary(mesh, face.elem_lo, phys)
    return FaceTrace(
        phys=phys,
        ref_hi=ref_hi,
        ref_lo=ref_lo,
        arc_jacobian=0.5 * face.length,
    )


def _pullback_onto_boundary(mesh: MeshTopology, elem: int, phys: np.ndarray) -> np.ndarray:
    if elem is None or not 0 <= elem < mesh.n_elements:
        raise ValueError(f"face references element {elem} outside the mesh")
    ref = mesh.elements[elem].affine_map.invert(phys)
    if np.any(np.abs(ref) > 1.0 + 1e-12) or not np.all(
        np.any(np.abs(np.abs(ref) - 1.0) < 1e-12, axis=1)
    ):
        raise ValueError(
            f"face does not lie on the boundary of element {elem}; mismatched face/mesh"
        )
    return ref
