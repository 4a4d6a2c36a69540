"""Backend-agreement and oracle tests for the DP kernels."""

import numpy as np
import pytest

from dubkit import _kernels
from dubkit._kernels import _fallback

try:
    from dubkit._kernels import _native
except ImportError:
    _native = None

BACKENDS = [_fallback] + ([_native] if _native is not None else [])


def lev_oracle(a, b):
    """Full-table Levenshtein DP, written independently of the kernels."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[n][m]


def dtw_avg_oracle(dist):
    """Exhaustive enumeration of all monotone paths; min of cost/length."""
    n, m = dist.shape
    best = np.inf
    stack = [(0, 0, float(dist[0, 0]), 1)]
    while stack:
        i, j, cost, length = stack.pop()
        if i == n - 1 and j == m - 1:
            best = min(best, cost / length)
            continue
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                stack.append((ni, nj, cost + float(dist[ni, nj]), length + 1))
    return best


@pytest.mark.parametrize("impl", BACKENDS)
def test_levenshtein_known_cases(impl):
    def lev(a, b):
        return impl.levenshtein(
            np.array([ord(c) for c in a], dtype=np.int32),
            np.array([ord(c) for c in b], dtype=np.int32),
        )

    assert lev("kitten", "sitting") == 3
    assert lev("", "abc") == 3
    assert lev("abc", "") == 3
    assert lev("same", "same") == 0
    assert lev("abcd", "wxyz") == 4


@pytest.mark.parametrize("impl", BACKENDS)
def test_levenshtein_matches_oracle(impl):
    rng = np.random.default_rng(7)
    for _ in range(300):
        a = rng.integers(0, 5, size=rng.integers(0, 15)).astype(np.int32)
        b = rng.integers(0, 5, size=rng.integers(0, 15)).astype(np.int32)
        assert impl.levenshtein(a, b) == lev_oracle(a.tolist(), b.tolist())


@pytest.mark.parametrize("impl", BACKENDS)
def test_dtw_average_cost_matches_enumeration(impl):
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        dist = rng.random((n, m))
        got = impl.dtw_average_cost(dist)
        assert got == pytest.approx(dtw_avg_oracle(dist), abs=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
def test_dtw_average_cost_rejects_empty(impl):
    with pytest.raises(ValueError):
        impl.dtw_average_cost(np.empty((0, 3)))


@pytest.mark.skipif(_native is None, reason="compiled kernels unavailable")
def test_backends_agree():
    rng = np.random.default_rng(23)
    for _ in range(100):
        a = rng.integers(0, 8, size=rng.integers(0, 40)).astype(np.int32)
        b = rng.integers(0, 8, size=rng.integers(0, 40)).astype(np.int32)
        assert _native.levenshtein(a, b) == _fallback.levenshtein(a, b)
    for _ in range(50):
        dist = rng.random((int(rng.integers(1, 12)), int(rng.integers(1, 12))))
        assert _native.dtw_average_cost(dist) == pytest.approx(
            _fallback.dtw_average_cost(dist), abs=1e-12
        )


def test_longer_path_can_win_the_average():
    # every path here has total cost 2, so the length-3 detour beats the
    # diagonal on average; a plain min-total DTW cannot see this
    dist = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert _kernels.dtw_average_cost(dist) == pytest.approx(2.0 / 3.0)


def test_selected_backend_exposed():
    assert _kernels.BACKEND in ("native", "python")
