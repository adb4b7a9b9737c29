# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cross-kernel matrices (RBF and Matern 3/2, 5/2).

Fuses the pairwise squared-distance loop with the kernel transform so the
hot path of calibration (node-by-training-point matrices) makes a single
pass over memory. Row order is fixed, so results are bitwise deterministic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

SQRT6 = sqrt(6.0)
SQRT10 = sqrt(10.0)


def rbf_cross(double[:, ::1] a, double[:, ::1] b, double phi):
    """exp(-phi * ||a_i - b_j||^2) for all row pairs."""
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0], k = a.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double s, diff
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                diff = a[i, t] - b[j, t]
                s += diff * diff
            out[i, j] = exp(-phi * s)
    return out_arr


def matern15_cross(double[:, ::1] a, double[:, ::1] b, double rho):
    """(1 + t) exp(-t) with t = sqrt(6) * ||a_i - b_j|| / rho."""
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0], k = a.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double s, diff, u
    cdef double c = SQRT6 / rho
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                diff = a[i, t] - b[j, t]
                s += diff * diff
            u = c * sqrt(s)
            out[i, j] = (1.0 + u) * exp(-u)
    return out_arr


def matern25_cross(double[:, ::1] a, double[:, ::1] b, double rho):
    """(1 + t + t^2/3) exp(-t) with t = sqrt(10) * ||a_i - b_j|| / rho."""
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0], k = a.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double s, diff, u
    cdef double c = SQRT10 / rho
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                diff = a[i, t] - b[j, t]
                s += diff * diff
            u = c * sqrt(s)
            out[i, j] = (1.0 + u + u * u / 3.0) * exp(-u)
    return out_arr
