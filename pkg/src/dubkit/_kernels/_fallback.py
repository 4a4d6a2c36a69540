"""Vectorized numpy implementations of the hot DP kernels.

Used when the compiled extension is unavailable (or when
DUBKIT_PURE_PYTHON is set). Results are identical to the native
backend; only throughput differs.
"""

import numpy as np


def levenshtein(a, b):
    """Edit distance between two int32 token arrays.

    Row-wise DP. The sequential insert chain cur[j] = cur[j-1] + 1 is
    resolved with a prefix minimum: cur[j] = j + cummin(base[k] - k),
    which is exact and lets every row run as whole-array numpy ops.
    """
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    n, m = a.shape[0], b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    offsets = np.arange(m + 1, dtype=np.int64)
    prev = offsets.copy()
    base = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        base[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (b != a[i - 1]), out=base[1:])
        prev = np.minimum.accumulate(base - offsets) + offsets
    return int(prev[m])


def dtw_average_cost(dist):
    """Minimum over monotone alignment paths of (path cost / path length).

    `dist` is the (n, m) pairwise frame-cost matrix. Paths start at
    (0, 0), end at (n-1, m-1) and advance by (1,0), (0,1) or (1,1).
    Averaging by path length makes this a fractional objective, so the
    plain DTW recursion is not enough: the DP is indexed by exact path
    length L and the ratio is minimized over all reachable L at the end
    cell. O(n * m * (n + m)) time, two (n, m) slabs of memory.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if dist.ndim != 2:
        raise ValueError("dtw_average_cost: cost matrix must be 2-D")
    n, m = dist.shape
    if n == 0 or m == 0:
        raise ValueError("dtw_average_cost: empty cost matrix")
    if n == 1 and m == 1:
        return float(dist[0, 0])

    inf = np.inf
    prev = np.full((n, m), inf)
    prev[0, 0] = dist[0, 0]
    cur = np.empty((n, m))
    best = inf
    for length in range(2, n + m):
        cur.fill(inf)
        cur[1:, :] = prev[:-1, :]                                   # step down
        np.minimum(cur[:, 1:], prev[:, :-1], out=cur[:, 1:])        # step right
        np.minimum(cur[1:, 1:], prev[:-1, :-1], out=cur[1:, 1:])    # step diagonal
        cur += dist
        end = cur[n - 1, m - 1]
        if end / length < best:
            best = end / length
        prev, cur = cur, prev
    return float(best)
