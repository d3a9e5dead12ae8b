# Compiled assembly kernels; mirrors _numpy_backend exactly (see the
# package __init__ for the shared contract).

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"


def volume_blocks(double[::1] wdet, double[:, ::1] vals,
                  double[:, :, ::1] gphys, double[:, ::1] kvals):
    cdef Py_ssize_t ne = kvals.shape[0]
    cdef Py_ssize_t nq = wdet.shape[0]
    cdef Py_ssize_t nb = vals.shape[1]
    out_arr = np.zeros((ne, nb, nb))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t e, q, a, b
    cdef double w, kw, va, gax, gay
    for e in range(ne):
        for q in range(nq):
            w = wdet[q]
            kw = w * kvals[e, q]
            for a in range(nb):
                va = w * vals[q, a]
                gax = kw * gphys[q, a, 0]
                gay = kw * gphys[q, a, 1]
                for b in range(nb):
                    out[e, a, b] += (gax * gphys[q, b, 0]
                                     + gay * gphys[q, b, 1]
                                     + va * vals[q, b])
    return out_arr


def load_vectors(double[::1] wdet, double[:, ::1] vals, double[:, ::1] fvals):
    cdef Py_ssize_t ne = fvals.shape[0]
    cdef Py_ssize_t nq = wdet.shape[0]
    cdef Py_ssize_t nb = vals.shape[1]
    out_arr = np.zeros((ne, nb))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t e, q, a
    cdef double wf
    for e in range(ne):
        for q in range(nq):
            wf = wdet[q] * fvals[e, q]
            for a in range(nb):
                out[e, a] += wf * vals[q, a]
    return out_arr


def interior_face_blocks(double[::1] jw,
                         double[:, ::1] v_hi, double[:, ::1] v_lo,
                         double[:, ::1] gn_hi, double[:, ::1] gn_lo,
                         double[:, ::1] k_hi, double[:, ::1] k_lo,
                         double stab):
    cdef Py_ssize_t nf = k_hi.shape[0]
    cdef Py_ssize_t nq = jw.shape[0]
    cdef Py_ssize_t nb = v_hi.shape[1]
    out_arr = np.zeros((4, nf, nb, nb))
    cdef double[:, :, :, ::1] out = out_arr
    cdef double[:, ::1] v_r, v_c, gn_r, gn_c, k_r, k_c
    cdef Py_ssize_t i, r, c, f, q, a, b
    cdef double s_r, s_c, w, kr, kc, fluxa, t2a, t3f
    for r in range(2):
        s_r = 1.0 if r == 0 else -1.0
        v_r = v_hi if r == 0 else v_lo
        gn_r = gn_hi if r == 0 else gn_lo
        k_r = k_hi if r == 0 else k_lo
        for c in range(2):
            s_c = 1.0 if c == 0 else -1.0
            v_c = v_hi if c == 0 else v_lo
            gn_c = gn_hi if c == 0 else gn_lo
            k_c = k_hi if c == 0 else k_lo
            i = 2 * r + c
            for f in range(nf):
                for q in range(nq):
                    w = jw[q]
                    kr = k_r[f, q]
                    kc = k_c[f, q]
                    for a in range(nb):
                        fluxa = kr * gn_r[q, a]
                        t2a = -0.5 * s_r * w * kc * v_r[q, a]
                        t3f = stab * s_r * s_c * w * fluxa * kc
                        fluxa = 0.5 * s_c * w * fluxa
                        for b in range(nb):
                            out[i, f, a, b] += (fluxa * v_c[q, b]
                                                + t2a * gn_c[q, b]
                                                + t3f * gn_c[q, b])
    return tuple(out_arr)


def stabilization_face_blocks(double[::1] jw,
                              double[:, ::1] gn_hi, double[:, ::1] gn_lo,
                              double[:, ::1] k_hi, double[:, ::1] k_lo):
    cdef Py_ssize_t nf = k_hi.shape[0]
    cdef Py_ssize_t nq = jw.shape[0]
    cdef Py_ssize_t nb = gn_hi.shape[1]
    out_arr = np.zeros((4, nf, nb, nb))
    cdef double[:, :, :, ::1] out = out_arr
    cdef double[:, ::1] gn_r, gn_c, k_r, k_c
    cdef Py_ssize_t i, r, c, f, q, a, b
    cdef double s_r, s_c, w, coef
    for r in range(2):
        s_r = 1.0 if r == 0 else -1.0
        gn_r = gn_hi if r == 0 else gn_lo
        k_r = k_hi if r == 0 else k_lo
        for c in range(2):
            s_c = 1.0 if c == 0 else -1.0
            gn_c = gn_hi if c == 0 else gn_lo
            k_c = k_hi if c == 0 else k_lo
            i = 2 * r + c
            for f in range(nf):
                for q in range(nq):
                    w = s_r * s_c * jw[q] * k_r[f, q] * k_c[f, q]
                    for a in range(nb):
                        coef = w * gn_r[q, a]
                        for b in range(nb):
                            out[i, f, a, b] += coef * gn_c[q, b]
    return tuple(out_arr)


def boundary_face_blocks(double[::1] jw, double[:, ::1] vals,
                         double[:, ::1] gn, double[:, ::1] kvals):
    cdef Py_ssize_t nf = kvals.shape[0]
    cdef Py_ssize_t nq = jw.shape[0]
    cdef Py_ssize_t nb = vals.shape[1]
    m_arr = np.zeros((nf, nb, nb))
    cdef double[:, :, ::1] m = m_arr
    cdef Py_ssize_t f, q, a, b
    cdef double w, ga
    for f in range(nf):
        for q in range(nq):
            w = jw[q] * kvals[f, q]
            for a in range(nb):
                ga = w * gn[q, a]
                for b in range(nb):
                    m[f, a, b] += ga * vals[q, b]
    return m_arr - m_arr.swapaxes(1, 2)


def flux_gram_blocks(double[::1] jw, double[:, ::1] gn, double[:, ::1] kvals):
    cdef Py_ssize_t nf = kvals.shape[0]
    cdef Py_ssize_t nq = jw.shape[0]
    cdef Py_ssize_t nb = gn.shape[1]
    out_arr = np.zeros((nf, nb, nb))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t f, q, a, b
    cdef double w, ga
    for f in range(nf):
        for q in range(nq):
            w = jw[q] * kvals[f, q] * kvals[f, q]
            for a in range(nb):
                ga = w * gn[q, a]
                for b in range(nb):
                    out[f, a, b] += ga * gn[q, b]
    return out_arr
