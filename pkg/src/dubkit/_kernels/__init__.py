"""Backend selection for the compiled DP kernels.

The native Cython extension is preferred; the numpy fallback is used
when it is missing or when DUBKIT_PURE_PYTHON=1 is set. Both backends
compute identical results (asserted in tests/test_kernels.py), so the
choice is invisible to callers. `BACKEND` reports which one is active;
benchmarks/bench_kernels.py compares their throughput.
"""

import os

from . import _fallback

if os.environ.get("DUBKIT_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

levenshtein = _impl.levenshtein
dtw_average_cost = _impl.dtw_average_cost

__all__ = ["BACKEND", "levenshtein", "dtw_average_cost"]
