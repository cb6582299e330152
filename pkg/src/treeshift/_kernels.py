"""Inner loops over parent/child index arrays.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy version.
The numba path is selected at import time unless numba is missing or the
environment variable ``TREESHIFT_DISABLE_NUMBA`` is set to a non-empty value
other than ``"0"``.  Both paths compute the same quantities; the test-suite
checks them against each other and ``benchmarks/bench_kernels.py`` times them.

Conventions
-----------
Vertices are breadth-first indexed, so the children of vertex ``v`` are the
contiguous index range ``child_ptr[v]:child_ptr[v + 1]`` and every non-root
vertex appears in exactly one such range.  ``X`` arguments are 2-D (rows are
vertices, columns are independent vectors).
"""

import os

import numpy as np

_flag = os.environ.get("TREESHIFT_DISABLE_NUMBA", "")
_WANT_NUMBA = _flag in ("", "0")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is installed in CI
    HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path


def _np_gather_scale(idx, scale, X):
    return scale[:, None] * X[idx]


def _np_segment_sum_scaled(ptr, scale, X):
    out = np.zeros((ptr.shape[0] - 1, X.shape[1]), dtype=X.dtype)
    lo, hi = ptr[0], ptr[-1]
    if hi <= lo:
        return out
    W = scale[lo:hi, None] * X[lo:hi]
    nonempty = ptr[:-1] < ptr[1:]
    # nonempty segments tile [lo, hi) in order, which is what reduceat needs
    out[nonempty] = np.add.reduceat(W, ptr[:-1][nonempty] - lo, axis=0)
    return out


def _np_power_norms_sq(child_ptr, lam2, n_max):
    V = child_ptr.shape[0] - 1
    P = np.zeros((n_max + 1, V))
    P[0] = 1.0
    for n in range(1, n_max + 1):
        P[n] = _np_segment_sum_scaled(child_ptr, lam2, P[n - 1][:, None])[:, 0]
    return P


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_gather_scale(idx, scale, X):
        m = idx.shape[0]
        k = X.shape[1]
        out = np.empty((m, k), dtype=X.dtype)
        for i in range(m):
            s = scale[i]
            src = idx[i]
            for c in range(k):
                out[i, c] = s * X[src, c]
        return out

    @njit(cache=True)
    def _nb_segment_sum_scaled(ptr, scale, X):
        m = ptr.shape[0] - 1
        k = X.shape[1]
        out = np.zeros((m, k), dtype=X.dtype)
        for j in range(m):
            for i in range(ptr[j], ptr[j + 1]):
                s = scale[i]
                for c in range(k):
                    out[j, c] += s * X[i, c]
        return out

    @njit(cache=True)
    def _nb_power_norms_sq(child_ptr, lam2, n_max):
        V = child_ptr.shape[0] - 1
        P = np.zeros((n_max + 1, V))
        for v in range(V):
            P[0, v] = 1.0
        for n in range(1, n_max + 1):
            for v in range(V):
                acc = 0.0
                for u in range(child_ptr[v], child_ptr[v + 1]):
                    acc += lam2[u] * P[n - 1, u]
                P[n, v] = acc
        return P


IMPLEMENTATIONS = {
    "numpy": {
        "gather_scale": _np_gather_scale,
        "segment_sum_scaled": _np_segment_sum_scaled,
        "power_norms_sq": _np_power_norms_sq,
    }
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "gather_scale": _nb_gather_scale,
        "segment_sum_scaled": _nb_segment_sum_scaled,
        "power_norms_sq": _nb_power_norms_sq,
    }

BACKEND = "numba" if (HAVE_NUMBA and _WANT_NUMBA) else "numpy"


def _impl(name, backend):
    return IMPLEMENTATIONS[backend or BACKEND][name]


def _as_2d(X):
    X = np.asarray(X)
    if X.dtype.kind == "c":
        X = X.astype(np.complex128, copy=False)
    else:
        X = X.astype(np.float64, copy=False)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    return np.ascontiguousarray(X), squeeze


def gather_scale(idx, scale, X, backend=None):
    """``out[i] = scale[i] * X[idx[i]]`` row-wise."""
    X2, squeeze = _as_2d(X)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    scale = np.ascontiguousarray(scale, dtype=np.float64)
    out = _impl("gather_scale", backend)(idx, scale, X2)
    return out[:, 0] if squeeze else out


def segment_sum_scaled(ptr, scale, X, backend=None):
    """``out[j] = sum(scale[i] * X[i] for i in range(ptr[j], ptr[j+1]))``."""
    X2, squeeze = _as_2d(X)
    ptr = np.ascontiguousarray(ptr, dtype=np.int64)
    scale = np.ascontiguousarray(scale, dtype=np.float64)
    out = _impl("segment_sum_scaled", backend)(ptr, scale, X2)
    return out[:, 0] if squeeze else out


def power_norms_sq(child_ptr, lam2, n_max, backend=None):
    """Table ``P[n, v] = ||S^n e_v||^2`` for ``n <= n_max``.

    Uses ``S^n e_v = sum_u lam_u S^(n-1) e_u`` over children ``u`` of ``v``,
    whose summands have disjoint supports.  Entries whose subtree runs past
    the truncation are undercounts; callers mask them by depth.
    """
    child_ptr = np.ascontiguousarray(child_ptr, dtype=np.int64)
    lam2 = np.ascontiguousarray(lam2, dtype=np.float64)
    return _impl("power_norms_sq", backend)(child_ptr, lam2, int(n_max))
