# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled block weight kernels.

Each study block of the marginal covariance is D + s2xi * 11^T with
D = diag(s2zeta + v); its inverse is applied through the rank-one identity
block by block, never forming an m x m matrix.
"""

import numpy as np

from libc.math cimport log, log1p

from .errors import SingularBlockError


def weighted_sums(const double[::1] v, const Py_ssize_t[::1] starts, double s2xi, double s2zeta,
                  const double[:, ::1] X, const double[::1] y):
    cdef Py_ssize_t h = starts.shape[0] - 1
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t j, i, a, b
    cdef double di, s, c, uy, logdet = 0.0, ytwy = 0.0, diag
    xtwx_arr = np.zeros((p, p))
    xtwy_arr = np.zeros(p)
    u_arr = np.empty(p)
    cdef double[:, ::1] xtwx = xtwx_arr
    cdef double[::1] xtwy = xtwy_arr
    cdef double[::1] u = u_arr
    for j in range(h):
        s = 0.0
        uy = 0.0
        for a in range(p):
            u[a] = 0.0
        for i in range(starts[j], starts[j + 1]):
            diag = s2zeta + v[i]
            if diag <= 0.0:
                raise SingularBlockError("covariance block has a non-positive diagonal entry")
            di = 1.0 / diag
            logdet += log(diag)
            s += di
            uy += di * y[i]
            ytwy += di * y[i] * y[i]
            for a in range(p):
                u[a] += di * X[i, a]
                xtwy[a] += di * X[i, a] * y[i]
                for b in range(a + 1):
                    xtwx[a, b] += di * X[i, a] * X[i, b]
        c = s2xi / (1.0 + s2xi * s)
        logdet += log1p(s2xi * s)
        ytwy -= c * uy * uy
        for a in range(p):
            xtwy[a] -= c * u[a] * uy
            for b in range(a + 1):
                xtwx[a, b] -= c * u[a] * u[b]
    for a in range(p):
        for b in range(a):
            xtwx[b, a] = xtwx[a, b]
    return xtwx_arr, xtwy_arr, ytwy, logdet


def block_solve(const double[::1] v, const Py_ssize_t[::1] starts, double s2xi, double s2zeta,
                const double[:, ::1] R):
    cdef Py_ssize_t h = starts.shape[0] - 1
    cdef Py_ssize_t q = R.shape[1]
    cdef Py_ssize_t j, i, a
    cdef double di, s, c, logdet = 0.0, diag
    out_arr = np.empty((R.shape[0], q))
    u_arr = np.empty(q)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] u = u_arr
    for j in range(h):
        s = 0.0
        for a in range(q):
            u[a] = 0.0
        for i in range(starts[j], starts[j + 1]):
            diag = s2zeta + v[i]
            if diag <= 0.0:
                raise SingularBlockError("covariance block has a non-positive diagonal entry")
            di = 1.0 / diag
            logdet += log(diag)
            s += di
            for a in range(q):
                out[i, a] = di * R[i, a]
                u[a] += out[i, a]
        c = s2xi / (1.0 + s2xi * s)
        logdet += log1p(s2xi * s)
        for i in range(starts[j], starts[j + 1]):
            di = 1.0 / (s2zeta + v[i])
            for a in range(q):
                out[i, a] -= c * di * u[a]
    return out_arr, logdet
