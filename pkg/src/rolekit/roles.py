"""Clustering similarity rows into roles and summarizing the result."""

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RoleAssignment:
    labels: np.ndarray
    k: int
    inertia: float = np.nan
    degenerate: bool = False

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.k < 1:
            raise InputError("k must be at least 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise InputError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.labels.size

    def groups(self):
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]


def _relabel_by_first_occurrence(labels, k):
    mapping = {}
    for lab in labels:
        if lab not in mapping:
            mapping[lab] = len(mapping)
    for lab in range(k):
        if lab not in mapping:
            mapping[lab] = len(mapping)
    return np.array([mapping[lab] for lab in labels], dtype=np.int64)


def _plusplus(X, k, rng):
    n = X.shape[0]
    centers = [int(rng.integers(n))]
    d2 = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            return None
        idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
        idx = min(idx, n - 1)
        centers.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return X[centers].copy()


def _lloyd(X, C, max_iter, tol):
    k = C.shape[0]
    prev = np.inf
    labels = None
    for _ in range(max_iter):
        labels, dist = _kernels.assign(X, C)
        obj = float(dist.sum())
        assert obj <= prev * (1 + 1e-12) + 1e-12, "k-means objective increased"
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # reseed from the point farthest from its center
            far = int(np.argmax(dist))
            C[c] = X[far]
            labels[far] = c
            dist[far] = 0.0
            counts = np.bincount(labels, minlength=k)
        newC = np.zeros_like(C)
        np.add.at(newC, labels, X)
        newC /= np.maximum(counts, 1)[:, None]
        shift = float(np.max(np.abs(newC - C)))
        C = newC
        prev = obj
        if shift <= tol:
            break
    labels, dist = _kernels.assign(X, C)
    return labels, float(dist.sum())


def _degenerate_split(X, k):
    # fewer distinct rows than k: group equal rows, then peel single nodes
    # off the largest group until every label is used
    _, labels = np.unique(X, axis=0, return_inverse=True)
    labels = labels.ravel().astype(np.int64)
    used = int(labels.max()) + 1
    for c in range(used, k):
        counts = np.bincount(labels, minlength=k)
        big = int(np.argmax(counts))
        labels[np.flatnonzero(labels == big)[-1]] = c
    return labels


def kmeans(rows, k, seed, restarts=1, max_iter=300, tol=1e-12, normalize=False):
    """Lloyd's algorithm with k-means++ seeding; best of ``restarts`` runs.

    Restart seeds are spawned deterministically from ``seed`` and ties in the
    objective go to the lower restart index.  Labels are renumbered in order
    of first appearance.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2:
        raise InputError("rows must be a 2-d array")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise InputError("restarts must be positive")
    if normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(norms > 0, norms, 1.0)
    if k == 1:
        inertia = float(np.sum((X - X.mean(axis=0)) ** 2))
        return RoleAssignment(np.zeros(n, dtype=np.int64), 1, inertia)
    if np.unique(X, axis=0).shape[0] < k:
        log.warning("fewer distinct rows than k=%d; returning an arbitrary valid split", k)
        labels = _relabel_by_first_occurrence(_degenerate_split(X, k), k)
        return RoleAssignment(labels, k, np.nan, degenerate=True)
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.Generator(np.random.Philox(child))
        C = _plusplus(X, k, rng)
        labels, obj = _lloyd(X, C, max_iter, tol)
        if best is None or obj < best[1]:
            best = (labels, obj)
    labels = _relabel_by_first_occurrence(best[0], k)
    return RoleAssignment(labels, k, best[1])


@dataclass(frozen=True, eq=False)
class ConsensusReport:
    counts: np.ndarray
    labels: np.ndarray
    runs: int


def _align(ref, labels, k):
    """Greedy maximum-overlap relabeling of ``labels`` onto ``ref``."""
    table = np.zeros((k, k), dtype=np.int64)
    np.add.at(table, (labels, ref), 1)
    mapping = np.full(k, -1)
    work = table.astype(float)
    for _ in range(k):
        # argmax over the flattened table picks the lowest (row, col) on ties
        src, dst = np.unravel_index(int(np.argmax(work)), work.shape)
        mapping[src] = dst
        work[src, :] = -1
        work[:, dst] = -1
    return mapping[labels]


def consensus(assignments):
    assignments = list(assignments)
    if not assignments:
        raise InputError("no assignments to combine")
    n, k = assignments[0].n, assignments[0].k
    for a in assignments:
        if a.n != n or a.k != k:
            raise InputError("all assignments must share n and k")
    # align to the best run (lowest objective, earliest on ties); runs
    # without an objective only serve as reference if nothing better exists
    inertia = [a.inertia if np.isfinite(a.inertia) else np.inf for a in assignments]
    ref = assignments[int(np.argmin(inertia))].labels
    counts = np.zeros((n, k), dtype=np.int64)
    for a in assignments:
        aligned = _align(ref, a.labels, k)
        counts[np.arange(n), aligned] += 1
    return ConsensusReport(counts=counts, labels=np.argmax(counts, axis=1), runs=len(assignments))


def estimate_role_matrix(g, assignment, binarize=True):
    """Block densities: arcs from role p to role q over ``n_p * n_q``.

    Empty roles give NaN rows/columns.  With ``binarize=False`` arc weights
    are summed instead of counted.
    """
    labels = np.asarray(assignment.labels)
    if labels.size != g.n:
        raise InputError(f"assignment has {labels.size} labels for {g.n} nodes")
    k = assignment.k
    A = g.adjacency.tocoo()
    w = np.ones_like(A.data) if binarize else A.data
    arcs = np.zeros((k, k))
    np.add.at(arcs, (labels[A.row], labels[A.col]), w)
    sizes = np.bincount(labels, minlength=k).astype(float)
    denom = np.outer(sizes, sizes)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, arcs / denom, np.nan)


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def ari(a, b):
    """Adjusted Rand index by pair counting over the contingency table."""
    la = np.asarray(getattr(a, "labels", a))
    lb = np.asarray(getattr(b, "labels", b))
    if la.shape != lb.shape:
        raise InputError("partitions must cover the same nodes")
    n = la.size
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1)) if n else np.zeros((1, 1))
    np.add.at(table, (ia.ravel(), ib.ravel()), 1)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    if total == 0:
        return 1.0
    expected = sa * sb / total
    maximum = 0.5 * (sa + sb)
    if maximum == expected:
        # both partitions trivial (all-in-one or all singletons)
        return 1.0 if index == expected else 0.0
    return float((index - expected) / (maximum - expected))
