"""Assembly kernel backends.

The hot inner loops of assembly (local volume/face block evaluation) exist
twice: a Cython extension (built at install time) and a pure-numpy fallback.
The compiled backend is selected at import when available; set
``FLUXDG_KERNELS=numpy`` to force the fallback.  Both implement the same
contract and agree to floating-point roundoff; ``benchmarks/bench_kernels.py``
compares their throughput.

Backend contract (all arrays float64, C-contiguous):

- ``volume_blocks(wdet (nq,), vals (nq,nb), gphys (nq,nb,2), kvals (ne,nq))
  -> (ne,nb,nb)``
- ``load_vectors(wdet, vals, fvals (ne,nq)) -> (ne,nb)``
- ``interior_face_blocks(jw (nq,), v_hi (nq,nb), v_lo, gn_hi (nq,nb), gn_lo,
  k_hi (nf,nq), k_lo, stab: float) -> 4 x (nf,nb,nb)`` in the order
  hi-hi, hi-lo, lo-hi, lo-lo (rows test, columns trial)
- ``stabilization_face_blocks(jw, gn_hi, gn_lo, k_hi, k_lo) -> 4 x (nf,nb,nb)``
- ``boundary_face_blocks(jw, vals (nq,nb), gn (nq,nb), kvals (nf,nq))
  -> (nf,nb,nb)``
- ``flux_gram_blocks(jw, gn, kvals) -> (nf,nb,nb)``
"""

import os

from . import _numpy_backend

_BACKENDS = {"numpy": _numpy_backend}

try:  # pragma: no cover - exercised only when the extension is built
    from . import _cykernels

    _BACKENDS["cython"] = _cykernels
except ImportError:
    _cykernels = None

_forced = os.environ.get("FLUXDG_KERNELS")
if _forced is not None and _forced not in _BACKENDS:
    raise ImportError(
        f"FLUXDG_KERNELS={_forced!r} is not available; choices: {sorted(_BACKENDS)}"
    )

_active = _BACKENDS[_forced or ("cython" if "cython" in _BACKENDS else "numpy")]

BACKEND = _active.NAME

volume_blocks = _active.volume_blocks
load_vectors = _active.load_vectors
interior_face_blocks = _active.interior_face_blocks
stabilization_face_blocks = _active.stabilization_face_blocks
boundary_face_blocks = _active.boundary_face_blocks
flux_gram_blocks = _active.flux_gram_blocks


def get_backend(name=None):
    """Return a backend module by name (default: the active one)."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}; choices: {sorted(_BACKENDS)}")


def available_backends():
    return sorted(_BACKENDS)
