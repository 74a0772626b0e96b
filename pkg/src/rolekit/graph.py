"""Weighted digraphs, degrees, strong connectivity and random-walk transitions."""

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InputError, ZeroDegreeError


def _freeze(M):
    for arr in (M.data, M.indices, M.indptr):
        arr.flags.writeable = False
    return M


@dataclass(frozen=True, eq=False)
class Digraph:
    """Directed weighted graph on nodes ``0..n-1``.

    ``adjacency`` is a canonical CSR matrix (sorted indices, no duplicates,
    strictly positive stored weights); ``adjacency_t`` is its transposed
    companion, also CSR.  ``index_base`` only affects how nodes are reported.
    """

    adjacency: sp.csr_matrix
    index_base: int = 0
    labels: tuple = None
    adjacency_t: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=np.float64, copy=True)
        if A.shape[0] != A.shape[1]:
            raise InputError(f"adjacency must be square, got {A.shape}")
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        if A.nnz and not (np.all(np.isfinite(A.data)) and A.data.min() > 0):
            raise InputError("arc weights must be finite and strictly positive")
        if self.labels is not None and len(self.labels) != A.shape[0]:
            raise InputError("labels must have one entry per node")
        At = A.T.tocsr()
        At.sort_indices()
        object.__setattr__(self, "adjacency", _freeze(A))
        object.__setattr__(self, "adjacency_t", _freeze(At))

    @classmethod
    def from_arcs(cls, n, arcs, index_base=0):
        """Build from ``(src, dst, weight)`` triples in 0-based indices."""
        arcs = list(arcs)
        if arcs:
            src, dst, w = (np.asarray(c) for c in zip(*arcs))
        else:
            src = dst = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        A = sp.coo_matrix((w.astype(float), (src, dst)), shape=(n, n))
        return cls(A.tocsr(), index_base=index_base)

    @classmethod
    def from_dense(cls, A, index_base=0):
        return cls(sp.csr_matrix(np.asarray(A, dtype=float)), index_base=index_base)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def num_arcs(self):
        return self.adjacency.nnz

    def arcs(self):
        """Yield ``(src, dst, weight)`` in row-major order, 0-based."""
        A = self.adjacency
        for i in range(self.n):
            for p in range(A.indptr[i], A.indptr[i + 1]):
                yield i, int(A.indices[p]), float(A.data[p])

    def dense(self):
        return self.adjacency.toarray()

    def binarized(self):
        A = self.adjacency.copy()
        A.data = np.ones_like(A.data)
        return Digraph(A, index_base=self.index_base, labels=self.labels)

    def is_unweighted(self):
        return bool(np.all(self.adjacency.data == 1.0))

    def label(self, i):
        if self.labels is not None:
            return self.labels[i]
        return str(i + self.index_base)


@dataclass(frozen=True)
class DegreeInfo:
    d_in: np.ndarray
    d_out: np.ndarray


@dataclass(frozen=True, eq=False)
class RowStochasticPair:
    """``P = D_out^-1 A`` and ``Q = D_in^-1 A^T`` plus their transposes (CSR)."""

    P: sp.csr_matrix
    Q: sp.csr_matrix
    Pt: sp.csr_matrix
    Qt: sp.csr_matrix

    @property
    def n(self):
        return self.P.shape[0]

    @classmethod
    def from_dense(cls, P, Q):
        P = sp.csr_matrix(np.asarray(P, dtype=float))
        Q = sp.csr_matrix(np.asarray(Q, dtype=float))
        return cls(P, Q, P.T.tocsr(), Q.T.tocsr())


# ---------------------------------------------------------------------------
# edge-list text format
# ---------------------------------------------------------------------------

def load_edge_list(text, index_base=0, default_weight=1.0, n=None):
    """Parse ``src dst [weight]`` lines into a :class:`Digraph`.

    ``text`` is a string or any iterable of lines such as an open file
    (paths go through :func:`read_edge_list`).  Lines starting with
    ``#`` start comments; blank lines are ignored.  An optional first content line
    ``n=<int>`` fixes the node count.  Duplicate arcs are summed.
    """
    if index_base not in (0, 1):
        raise InputError("index_base must be 0 or 1")
    if not default_weight > 0:
        raise InputError("default_weight must be positive")
    lines = io.StringIO(text) if isinstance(text, str) else text
    header_n = None
    src, dst, wts = [], [], []
    seen_content = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not seen_content and line.replace(" ", "").startswith("n="):
            seen_content = True
            try:
                header_n = int(line.replace(" ", "")[2:])
            except ValueError:
                raise InputError(f"line {lineno}: bad header {line!r}") from None
            if header_n < 0:
                raise InputError(f"line {lineno}: negative node count")
            continue
        seen_content = True
        parts = line.split()
        if len(parts) not in (2, 3):
            raise InputError(f"line {lineno}: expected 'src dst [weight]', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else default_weight
        except ValueError:
            raise InputError(f"line {lineno}: cannot parse {line!r}") from None
        if i < index_base or j < index_base:
            raise InputError(f"line {lineno}: node index below base {index_base}")
        if not (math.isfinite(w) and w > 0):
            raise InputError(f"line {lineno}: weight must be a positive real, got {parts[2]}")
        src.append(i - index_base)
        dst.append(j - index_base)
        wts.append(w)
    size = 1 + max(max(src), max(dst)) if src else 0
    if n is None:
        n = header_n
    if n is not None:
        if n < size:
            raise InputError(f"declared n={n} but node index {size - 1 + index_base} appears")
        size = n
    A = sp.coo_matrix((np.asarray(wts, dtype=float), (src, dst)), shape=(size, size))
    return Digraph(A.tocsr(), index_base=index_base)


def read_edge_list(path, index_base=0, default_weight=1.0):
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, index_base=index_base, default_weight=default_weight)


def write_edge_list(g, index_base=None):
    """Serialize to the edge-list format; :func:`load_edge_list` inverts it exactly."""
    base = g.index_base if index_base is None else index_base
    out = [f"n={g.n}"]
    for i, j, w in g.arcs():
        out.append(f"{i + base} {j + base} {w!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------

def degrees(g):
    # loops are added last so that augment_loops shifts degrees by exactly w
    A = g.adjacency
    loops = A.diagonal()
    off = A - sp.diags(loops)
    d_out = np.asarray(off.sum(axis=1)).ravel() + loops
    d_in = np.asarray(off.sum(axis=0)).ravel() + loops
    return DegreeInfo(d_in=d_in, d_out=d_out)


def is_strongly_connected(g):
    if g.n <= 1:
        return True
    ncomp, _ = connected_components(g.adjacency, directed=True, connection="strong")
    return ncomp == 1


def augment_loops(g, w=1.0):
    """Copy of ``g`` with weight ``w`` added to every diagonal entry."""
    if not w > 0:
        raise InputError("loop weight must be positive")
    A = g.adjacency + w * sp.identity(g.n, format="csr")
    return Digraph(A, index_base=g.index_base, labels=g.labels)


def has_positive_degrees(g):
    deg = degrees(g)
    return bool(np.all(deg.d_in > 0) and np.all(deg.d_out > 0))


def transition_pair(g):
    deg = degrees(g)
    for kind, d in (("out", deg.d_out), ("in", deg.d_in)):
        zero = np.flatnonzero(d <= 0)
        if zero.size:
            raise ZeroDegreeError(int(zero[0]), kind, g.index_base)
    P = sp.diags(1.0 / deg.d_out) @ g.adjacency
    Q = sp.diags(1.0 / deg.d_in) @ g.adjacency_t
    P, Q = P.tocsr(), Q.tocsr()
    P.sort_indices()
    Q.sort_indices()
    Pt, Qt = P.T.tocsr(), Q.T.tocsr()
    Pt.sort_indices()
    Qt.sort_indices()
    return RowStochasticPair(_freeze(P), _freeze(Q), _freeze(Pt), _freeze(Qt))
