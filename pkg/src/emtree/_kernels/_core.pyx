# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _pure.py for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "compiled"


def score_rows(double[::1] w, double[:, ::1] keys, double[::1] x, bint interaction):
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t d = keys.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double s, z
    cdef Py_ssize_t i, j
    for i in range(n):
        s = 0.0
        if interaction:
            for j in range(d):
                s += w[j] * (keys[i, j] * x[j])
        else:
            for j in range(d):
                s += w[j] * fabs(keys[i, j] - x[j])
        out[i] = s if s > 0.0 else 0.0
    return out


def project(double[::1] router, double[::1] key):
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(router.shape[0]):
        s += router[j] * key[j]
    return s


def project_rows(double[::1] router, double[:, ::1] keys):
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t d = keys.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double s
    cdef Py_ssize_t i, j
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += router[j] * keys[i, j]
        out[i] = s
    return out


def oja_pass(double[:, ::1] xc, double[::1] v0):
    cdef Py_ssize_t n = xc.shape[0]
    cdef Py_ssize_t d = xc.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.asarray(v0).copy()
    cdef double[::1] v = out
    cdef double dot, alpha, norm
    cdef Py_ssize_t i, j
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += xc[i, j] * v[j]
        alpha = dot / (i + 1.0)
        norm = 0.0
        for j in range(d):
            v[j] += alpha * xc[i, j]
            norm += v[j] * v[j]
        norm = sqrt(norm)
        if norm > 0.0:
            for j in range(d):
                v[j] /= norm
    return out


def hashed_dot(double[::1] w, cnp.int64_t[::1] slots, double[::1] phi):
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(slots.shape[0]):
        s += w[slots[i]] * phi[i]
    return s


def hashed_adagrad_update(double[::1] w, double[::1] acc, cnp.int64_t[::1] slots,
                          double[::1] phi, double err_scale, double lr):
    cdef Py_ssize_t m = slots.shape[0]
    cdef double g
    cdef Py_ssize_t i
    for i in range(m):
        g = err_scale * phi[i]
        if g != 0.0:
            acc[slots[i]] += g * g
    for i in range(m):
        g = err_scale * phi[i]
        if g != 0.0:
            w[slots[i]] -= lr * g / sqrt(acc[slots[i]])
