# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled DP kernels: Levenshtein distance and length-averaged DTW.

Mirrors dubkit._kernels._fallback exactly; see that module for the
algorithmic notes. These are the two O(n*m)-and-worse inner loops that
dominate corpus-scale filtering and evaluation runs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def levenshtein(a, b):
    """Edit distance between two int32 token arrays."""
    cdef cnp.int32_t[::1] av = np.ascontiguousarray(a, dtype=np.int32)
    cdef cnp.int32_t[::1] bv = np.ascontiguousarray(b, dtype=np.int32)
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t m = bv.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n

    cdef cnp.int64_t[::1] prev = np.arange(m + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cur = np.empty(m + 1, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef cnp.int64_t best, cand
    cdef cnp.int32_t ai
    for i in range(1, n + 1):
        ai = av[i - 1]
        cur[0] = i
        for j in range(1, m + 1):
            best = prev[j] + 1                       # delete
            cand = cur[j - 1] + 1                    # insert
            if cand < best:
                best = cand
            cand = prev[j - 1] + (bv[j - 1] != ai)   # substitute / match
            if cand < best:
                best = cand
            cur[j] = best
        prev, cur = cur, prev
    return int(prev[m])


def dtw_average_cost(dist):
    """Minimum over monotone alignment paths of (path cost / path length).

    Length-indexed DP; see the fallback module for the derivation.
    """
    arr = np.ascontiguousarray(dist, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("dtw_average_cost: cost matrix must be 2-D")
    cdef cnp.float64_t[:, ::1] d = arr
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t m = d.shape[1]
    if n == 0 or m == 0:
        raise ValueError("dtw_average_cost: empty cost matrix")
    if n == 1 and m == 1:
        return float(d[0, 0])

    cdef double inf = np.inf
    prev_arr = np.full((n, m), inf)
    cur_arr = np.empty((n, m))
    cdef cnp.float64_t[:, ::1] prev = prev_arr
    cdef cnp.float64_t[:, ::1] cur = cur_arr
    cdef cnp.float64_t[:, ::1] tmp
    prev[0, 0] = d[0, 0]

    cdef double best = inf
    cdef double step, cand, end
    cdef Py_ssize_t length, i, j
    for length in range(2, n + m):
        for i in range(n):
            for j in range(m):
                step = inf
                if i > 0:
                    step = prev[i - 1, j]
                if j > 0:
                    cand = prev[i, j - 1]
                    if cand < step:
                        step = cand
                if i > 0 and j > 0:
                    cand = prev[i - 1, j - 1]
                    if cand < step:
                        step = cand
                cur[i, j] = step + d[i, j]
        end = cur[n - 1, m - 1]
        if end / length < best:
            best = end / length
        tmp = prev
        prev = cur
        cur = tmp
    return float(best)
