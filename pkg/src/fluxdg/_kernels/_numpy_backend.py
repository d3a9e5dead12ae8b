"""Pure-numpy assembly kernels (fallback backend).

All functions take pre-tabulated reference data and per-entity coefficient
values and return dense local blocks; see the package __init__ for the
backend contract shared with the compiled implementation.
"""

import numpy as np

NAME = "numpy"


def volume_blocks(wdet, vals, gphys, kvals):
    """Weighted stiffness+mass blocks for a batch of elements.

    out[e, a, b] = sum_q wdet[q] * (kvals[e, q] * gphys[q, a, :] . gphys[q, b, :]
                                    + vals[q, a] * vals[q, b])
    """
    mass = np.einsum("q,qa,qb->ab", wdet, vals, vals)
    out = np.einsum("q,eq,qai,qbi->eab", wdet, kvals, gphys, gphys, optimize=True)
    out += mass
    return out


def load_vectors(wdet, vals, fvals):
    """Moment vectors out[e, a] = sum_q wdet[q] * fvals[e, q] * vals[q, a]."""
    return np.einsum("q,eq,qa->ea", wdet, fvals, vals, optimize=True)


def interior_face_blocks(jw, v_hi, v_lo, gn_hi, gn_lo, k_hi, k_lo, stab):
    """Local blocks of all interior-face terms for a batch of aligned faces.

    Rows are test functions, columns trial functions; returns the four
    blocks (hi-hi, hi-lo, lo-hi, lo-lo).  Per face the assembled terms are
    the skew pairing  [u]<K grad v . n> - [v]<K grad u . n>  plus the
    flux-jump penalty  stab * [K grad u . n][K grad v . n],  with the jump
    signed hi-minus-lo and n the stored face normal.
    """
    sides = ((1.0, v_hi, gn_hi, k_hi), (-1.0, v_lo, gn_lo, k_lo))
    out = []
    for s_r, v_r, gn_r, k_r in sides:
        for s_c, v_c, gn_c, k_c in sides:
            t1 = (0.5 * s_c) * np.einsum(
                "q,fq,qa,qb->fab", jw, k_r, gn_r, v_c, optimize=True
            )
            t2 = (-0.5 * s_r) * np.einsum(
                "q,fq,qa,qb->fab", jw, k_c, v_r, gn_c, optimize=True
            )
            t3 = (stab * s_r * s_c) * np.einsum(
                "q,fq,qa,fq,qb->fab", jw, k_r, gn_r, k_c, gn_c, optimize=True
            )
            out.append(t1 + t2 + t3)
    return tuple(out)


def stabilization_face_blocks(jw, gn_hi, gn_lo, k_hi, k_lo):
    """The flux-jump penalty blocks alone, with unit weight."""
    sides = ((1.0, gn_hi, k_hi), (-1.0, gn_lo, k_lo))
    out = []
    for s_r, gn_r, k_r in sides:
        for s_c, gn_c, k_c in sides:
            out.append(
                (s_r * s_c)
                * np.einsum("q,fq,qa,fq,qb->fab", jw, k_r, gn_r, k_c, gn_c, optimize=True)
            )
    return tuple(out)


def boundary_face_blocks(jw, vals, gn, kvals):
    """Weak-Dirichlet boundary blocks; exactly antisymmetric by construction.

    out[f, a, b] = int (vals_b * K dn(vals_a) - vals_a * K dn(vals_b)) ds
    """
    m = np.einsum("q,fq,qa,qb->fab", jw, kvals, gn, vals, optimize=True)
    return m - m.swapaxes(1, 2)


def flux_gram_blocks(jw, gn, kvals):
    """One-sided boundary flux Gram blocks out[f,a,b] = int K^2 dn(a) dn(b) ds."""
    return np.einsum("q,fq,qa,fq,qb->fab", jw, kvals, gn, kvals, gn, optimize=True)
