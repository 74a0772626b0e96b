"""Hot inner loops with a numba path and a pure numpy/scipy path.

The numba path is used when numba imports and ``ROLEKIT_NUMBA`` is not set
to ``0``.  Both paths take the same raw arrays and return the same results;
the walk sampler is bit-identical across backends because the uniforms are
drawn outside the kernel.  ``ROLEKIT_THREADS`` caps the numba worker count.
"""

import os

import numpy as np
import scipy.sparse as sp

try:
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover - numba is optional
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("ROLEKIT_NUMBA", "1") != "0"

if NUMBA_AVAILABLE and "NUMBA_THREADING_LAYER" not in os.environ:
    # an old system TBB only produces a warning; prefer the others
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

if NUMBA_AVAILABLE and os.environ.get("ROLEKIT_THREADS"):
    numba.set_num_threads(
        max(1, min(int(os.environ["ROLEKIT_THREADS"]), numba.config.NUMBA_NUM_THREADS))
    )


def backend():
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# sparse (CSR) times dense
# ---------------------------------------------------------------------------

def csr_dense_numpy(indptr, indices, data, X):
    n = indptr.size - 1
    A = sp.csr_matrix((data, indices, indptr), shape=(n, X.shape[0]))
    return np.asarray(A @ X)


if NUMBA_AVAILABLE:

    @njit(parallel=True, cache=True)
    def csr_dense_numba(indptr, indices, data, X):
        n = indptr.size - 1
        m = X.shape[1]
        out = np.zeros((n, m))
        # one output row per worker: deterministic regardless of scheduling
        for i in prange(n):
            for p in range(indptr[i], indptr[i + 1]):
                a = data[p]
                j = indices[p]
                for c in range(m):
                    out[i, c] += a * X[j, c]
        return out

else:  # pragma: no cover
    csr_dense_numba = None


def matmul(M, X):
    """``M @ X`` for a CSR or dense left factor and a dense right factor."""
    if sp.issparse(M):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if USE_NUMBA:
            return csr_dense_numba(M.indptr, M.indices, M.data, X)
        return csr_dense_numpy(M.indptr, M.indices, M.data, X)
    return M @ X


def sandwich(M, T):
    """``M T M^T`` using two sparse-times-dense products."""
    return matmul(M, matmul(M, np.asarray(T).T).T)


# ---------------------------------------------------------------------------
# generalized random walks
# ---------------------------------------------------------------------------

def walk_numpy(p_indptr, p_indices, p_cum, q_indptr, q_indices, q_cum, start, letters, u):
    trials, ell = letters.shape
    cur = np.full(trials, start, dtype=np.int64)
    for s in range(ell):
        nxt = np.empty_like(cur)
        for rev, indptr, indices, cum in (
            (0, p_indptr, p_indices, p_cum),
            (1, q_indptr, q_indices, q_cum),
        ):
            sel = letters[:, s] == rev
            if not sel.any():
                continue
            where = np.flatnonzero(sel)
            nodes = cur[where]
            for v in np.unique(nodes):
                lo, hi = indptr[v], indptr[v + 1]
                if lo == hi:
                    raise ValueError("walk reached a node with no admissible move")
                m = where[nodes == v]
                k = np.searchsorted(cum[lo:hi], u[m, s], side="right")
                np.minimum(k, hi - lo - 1, out=k)
                nxt[m] = indices[lo + k]
        cur = nxt
    return cur


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _pick(indptr, indices, cum, v, x):
        lo = indptr[v]
        hi = indptr[v + 1]
        if lo == hi:
            raise ValueError("walk reached a node with no admissible move")
        # first position with cum > x, clamped to the last entry of the row
        a = lo
        b = hi
        while a < b:
            mid = (a + b) // 2
            if cum[mid] > x:
                b = mid
            else:
                a = mid + 1
        if a >= hi:
            a = hi - 1
        return indices[a]

    @njit(cache=True)
    def walk_numba(p_indptr, p_indices, p_cum, q_indptr, q_indices, q_cum, start, letters, u):
        trials, ell = letters.shape
        out = np.empty(trials, dtype=np.int64)
        for t in range(trials):
            v = start
            for s in range(ell):
                if letters[t, s] == 0:
                    v = _pick(p_indptr, p_indices, p_cum, v, u[t, s])
                else:
                    v = _pick(q_indptr, q_indices, q_cum, v, u[t, s])
            out[t] = v
        return out

else:  # pragma: no cover
    walk_numba = None


def walk(p_indptr, p_indices, p_cum, q_indptr, q_indices, q_cum, start, letters, u):
    """Endpoints of ``trials`` generalized random walks from ``start``.

    ``letters[t, s]`` is 0 for a direct step (row of P) and 1 for a reverse
    step (row of Q); ``u[t, s]`` is the uniform consumed by that step.
    """
    fn = walk_numba if USE_NUMBA else walk_numpy
    return fn(p_indptr, p_indices, p_cum, q_indptr, q_indices, q_cum,
              np.int64(start), np.ascontiguousarray(letters, dtype=np.uint8),
              np.ascontiguousarray(u, dtype=np.float64))


# ---------------------------------------------------------------------------
# k-means assignment
# ---------------------------------------------------------------------------

def assign_numpy(X, C):
    n, k = X.shape[0], C.shape[0]
    d = np.empty((n, k))
    for c in range(k):
        diff = X - C[c]
        d[:, c] = np.einsum("ij,ij->i", diff, diff)
    labels = np.argmin(d, axis=1)
    return labels.astype(np.int64), d[np.arange(n), labels]


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def assign_numba(X, C):
        n, m = X.shape
        k = C.shape[0]
        labels = np.empty(n, dtype=np.int64)
        dist = np.empty(n)
        for i in range(n):
            best = np.inf
            arg = 0
            for c in range(k):
                s = 0.0
                for j in range(m):
                    t = X[i, j] - C[c, j]
                    s += t * t
                if s < best:
                    best = s
                    arg = c
            labels[i] = arg
            dist[i] = best
        return labels, dist

else:  # pragma: no cover
    assign_numba = None


def assign(X, C):
    """Nearest-center labels (lowest index on ties) and squared distances."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if USE_NUMBA:
        return assign_numba(X, C)
    return assign_numpy(X, C)
