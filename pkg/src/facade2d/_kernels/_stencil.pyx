# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels: 5-point stencil update and batched Thomas solves.

Mirrors the signatures of the pure-NumPy module ``pure``; the package selects
one of the two at import time.
"""

import numpy as np

cimport numpy as cnp


def stencil_step(double[:, ::1] u_curr, double[:, ::1] u_prev,
                 double[::1] gw, double[::1] ge,
                 double[::1] gs, double[::1] gn,
                 double[:, ::1] c_e, double[:, ::1] c_w,
                 double[:, ::1] c_n, double[:, ::1] c_s,
                 double[:, ::1] c_c, double[:, ::1] c_p,
                 double[:, ::1] out):
    cdef Py_ssize_t ny = u_curr.shape[0]
    cdef Py_ssize_t nx = u_curr.shape[1]
    cdef Py_ssize_t i, j
    cdef double e, w, n, s, acc
    cdef double total = 0.0
    for i in range(ny):
        for j in range(nx):
            e = u_curr[i, j + 1] if j < nx - 1 else ge[i]
            w = u_curr[i, j - 1] if j > 0 else gw[i]
            n = u_curr[i + 1, j] if i < ny - 1 else gn[j]
            s = u_curr[i - 1, j] if i > 0 else gs[j]
            acc = (c_e[i, j] * e + c_w[i, j] * w + c_n[i, j] * n
                   + c_s[i, j] * s + c_c[i, j] * u_curr[i, j]
                   + c_p[i, j] * u_prev[i, j])
            out[i, j] = acc
            total += acc
    return total


def thomas_many(double[:, ::1] dl, double[:, ::1] d,
                double[:, ::1] du, double[:, ::1] b,
                double[:, ::1] out):
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    cdef Py_ssize_t k, r
    cdef double piv
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    for r in range(m):
        piv = d[r, 0]
        if piv == 0.0:
            return 1
        cp[0] = du[r, 0] / piv
        out[r, 0] = b[r, 0] / piv
        for k in range(1, n):
            piv = d[r, k] - dl[r, k] * cp[k - 1]
            if piv == 0.0:
                return 1
            if k < n - 1:
                cp[k] = du[r, k] / piv
            out[r, k] = (b[r, k] - dl[r, k] * out[r, k - 1]) / piv
        for k in range(n - 2, -1, -1):
            out[r, k] -= cp[k] * out[r, k + 1]
    return 0
