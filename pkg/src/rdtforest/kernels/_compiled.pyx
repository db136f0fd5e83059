# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane of the hot kernels.

Same contracts as ``_numpy.py``. Each point walks its root-to-leaf path in
one scalar loop instead of h vectorized gathers, which is considerably
faster and touches each row of x only once.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _height(Py_ssize_t n_nodes) except -1:
    cdef Py_ssize_t h = 0
    cdef Py_ssize_t size = 1
    while size - 1 < n_nodes:
        if size - 1 == n_nodes:
            break
        h += 1
        size <<= 1
    if size - 1 != n_nodes:
        raise ValueError(f"inner node count {n_nodes} is not 2^h - 1")
    return h


def tree_height(n_nodes):
    return _height(n_nodes)


def route_points(const int[::1] attrs, const double[::1] thresholds, const double[:, ::1] x):
    cdef Py_ssize_t n_nodes = attrs.shape[0]
    cdef Py_ssize_t h = _height(n_nodes)
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef Py_ssize_t i, level, cur
    for i in range(n):
        cur = 0
        for level in range(h):
            cur = 2 * cur + 1 + (x[i, attrs[cur]] > thresholds[cur])
        out_v[i] = cur - n_nodes
    return out


def leaf_counts(const long long[::1] leaves, const unsigned char[::1] y, Py_ssize_t n_leaves):
    pos = np.zeros(n_leaves, dtype=np.int64)
    neg = np.zeros(n_leaves, dtype=np.int64)
    cdef long long[::1] pos_v = pos
    cdef long long[::1] neg_v = neg
    cdef Py_ssize_t i
    for i in range(leaves.shape[0]):
        if y[i]:
            pos_v[leaves[i]] += 1
        else:
            neg_v[leaves[i]] += 1
    return pos, neg


def route_and_count(
    const int[::1] attrs,
    const double[::1] thresholds,
    const double[:, ::1] x,
    const unsigned char[::1] y,
):
    cdef Py_ssize_t n_nodes = attrs.shape[0]
    cdef Py_ssize_t h = _height(n_nodes)
    cdef Py_ssize_t n = x.shape[0]
    pos = np.zeros(n_nodes + 1, dtype=np.int64)
    neg = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef long long[::1] pos_v = pos
    cdef long long[::1] neg_v = neg
    cdef Py_ssize_t i, level, cur
    for i in range(n):
        cur = 0
        for level in range(h):
            cur = 2 * cur + 1 + (x[i, attrs[cur]] > thresholds[cur])
        if y[i]:
            pos_v[cur - n_nodes] += 1
        else:
            neg_v[cur - n_nodes] += 1
    return pos, neg


def route_and_gather(
    const int[::1] attrs,
    const double[::1] thresholds,
    const double[:, ::1] x,
    const double[::1] values,
):
    cdef Py_ssize_t n_nodes = attrs.shape[0]
    cdef Py_ssize_t h = _height(n_nodes)
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i, level, cur
    for i in range(n):
        cur = 0
        for level in range(h):
            cur = 2 * cur + 1 + (x[i, attrs[cur]] > thresholds[cur])
        out_v[i] = values[cur - n_nodes]
    return out
