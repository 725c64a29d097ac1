# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef fused real_t:
    double
    long double


cdef inline double cabs2(double complex v) nogil:
    return v.real * v.real + v.imag * v.imag


def hyp3f2_series(a, b, z, double rtol=1e-14, int max_terms=500):
    """Sum the 3F2 series for every entry of ``z`` (compiled)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = np.ascontiguousarray(
        np.asarray(z, dtype=complex).ravel())
    cdef Py_ssize_t npts = zz.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(npts, dtype=complex)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nterms = np.full(npts, -1, dtype=np.int64)
    cdef double complex a1 = a[0], a2 = a[1], a3 = a[2], b1 = b[0], b2 = b[1]
    cdef double complex total, term, ratio, zi
    cdef double tol2 = rtol * rtol
    cdef Py_ssize_t i
    cdef int n
    with nogil:
        for i in range(npts):
            zi = zz[i]
            total = 1.0
            term = 1.0
            for n in range(max_terms):
                ratio = (a1 + n) * (a2 + n) * (a3 + n) / ((b1 + n) * (b2 + n) * (n + 1.0))
                term = term * ratio * zi
                total = total + term
                if cabs2(term) <= tol2 * cabs2(total) or (ratio.real == 0 and ratio.imag == 0):
                    nterms[i] = n + 1
                    break
            out[i] = total
    return out, nterms


def apply_stencil_axis(const real_t[:, ::1] values, const real_t[:, ::1] weights,
                       const cnp.int64_t[::1] starts):
    """Apply per-row stencils along the last axis (compiled, double or long double)."""
    cdef Py_ssize_t m = values.shape[0], n = values.shape[1], w = weights.shape[1]
    dtype = np.float64 if real_t is double else np.longdouble
    out_arr = np.empty((m, n), dtype=dtype)
    cdef real_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, i, k, s
    cdef real_t acc
    with nogil:
        for r in range(m):
            for i in range(n):
                s = starts[i]
                acc = 0
                for k in range(w):
                    acc = acc + weights[i, k] * values[r, s + k]
                out[r, i] = acc
    return out_arr
