"""Walk patterns, the pattern matrix operator and the layer matrices S^(l).

Normalization used throughout the package: layers are meeting
probabilities, ``S^(l) = 2^-l sum_{|psi|=l} psi(P,Q) psi(P,Q)^T``, while the
partial sums follow the matrix-equation scaling ``S_1 = P P^T + Q Q^T``, so
``partial_sum(k) = 2 * sum_{l<=k} beta2^(l-1) S^(l)``.
"""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InputError
from .solvers import SimilarityMatrix

ORACLE_MAX_LENGTH = 8
ORACLE_MAX_NODES = 12


@dataclass(frozen=True)
class WalkPattern:
    steps: str

    def __post_init__(self):
        if not isinstance(self.steps, str) or not self.steps:
            raise InputError("walk pattern must be a nonempty string over {d, r}")
        bad = set(self.steps) - {"d", "r"}
        if bad:
            raise InputError(f"walk pattern {self.steps!r} has letters outside {{d, r}}: {sorted(bad)}")

    @classmethod
    def parse(cls, text):
        return cls(text.strip())

    def __str__(self):
        return self.steps

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def all_patterns(ell):
    """All ``2**ell`` patterns of length ``ell`` in lexicographic order."""
    if ell < 1:
        raise InputError("pattern length must be at least 1")
    for letters in itertools.product("dr", repeat=ell):
        yield WalkPattern("".join(letters))


def _as_pattern(psi):
    return psi if isinstance(psi, WalkPattern) else WalkPattern(psi)


def _dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def apply_pattern(psi, M, N, seed=None):
    """``X_1 X_2 ... X_l`` with ``X_k = M`` for 'd' and ``N`` for 'r'.

    Without ``seed`` the product is accumulated left to right into a dense
    matrix.  With a seed vector (or block of columns) it returns
    ``psi(M, N) @ seed`` using right-to-left matrix-vector products.
    """
    psi = _as_pattern(psi)
    if M.shape != N.shape or M.shape[0] != M.shape[1]:
        raise InputError(f"M and N must be square of equal size, got {M.shape} and {N.shape}")
    if seed is not None:
        v = np.asarray(seed, dtype=float)
        if v.shape[0] != M.shape[0]:
            raise InputError("seed length does not match matrix size")
        flat = v.ndim == 1
        v = v.reshape(v.shape[0], -1)
        for letter in reversed(psi.steps):
            v = _kernels.matmul(M if letter == "d" else N, v)
        return v.ravel() if flat else v
    # left-to-right: R <- R X_k computed as (X_k^T R^T)^T
    Mt, Nt = M.T, N.T
    if sp.issparse(M):
        Mt, Nt = sp.csr_matrix(Mt), sp.csr_matrix(Nt)
    R = _dense(M if psi.steps[0] == "d" else N).astype(float)
    for letter in psi.steps[1:]:
        R = _kernels.matmul(Mt if letter == "d" else Nt, R.T).T
    return np.ascontiguousarray(R)


def count_walks(g, psi, binarize=False):
    """Integer matrix whose (i, j) entry counts the psi-walks from i to j."""
    psi = _as_pattern(psi)
    if not binarize and not g.is_unweighted():
        raise InputError("count_walks needs an unweighted graph (pass binarize=True)")
    A = (g.adjacency != 0).astype(np.int64).toarray()
    At = np.ascontiguousarray(A.T)
    R = A if psi.steps[0] == "d" else At
    for letter in psi.steps[1:]:
        R = R @ (A if letter == "d" else At)
    return R


def enumerate_walks(g, psi, source):
    """Every node sequence that is a psi-walk from ``source`` (exhaustive).

    This is an oracle for tests and is limited to small inputs.
    """
    psi = _as_pattern(psi)
    if len(psi) > ORACLE_MAX_LENGTH or g.n > ORACLE_MAX_NODES:
        raise InputError(
            f"enumeration limited to |psi| <= {ORACLE_MAX_LENGTH} and n <= {ORACLE_MAX_NODES}"
        )
    if not 0 <= source < g.n:
        raise InputError(f"source {source} out of range")
    A = g.dense() != 0
    walks = []

    def extend(seq):
        if len(seq) == len(psi) + 1:
            walks.append(list(seq))
            return
        u = seq[-1]
        letter = psi.steps[len(seq) - 1]
        for v in range(g.n):
            if (A[u, v] if letter == "d" else A[v, u]):
                seq.append(v)
                extend(seq)
                seq.pop()

    extend([source])
    return walks


@dataclass(frozen=True, eq=False)
class PatternLayer:
    ell: int
    matrix: np.ndarray


def _step(PQ, S):
    return 0.5 * (_kernels.sandwich(PQ.P, S) + _kernels.sandwich(PQ.Q, S))


def layer(PQ, ell):
    """``S^(ell)`` by the two-term recurrence from ``S^(0) = I``."""
    if ell < 1:
        raise InputError("layer index must be at least 1")
    S = np.eye(PQ.n)
    for _ in range(ell):
        S = _step(PQ, S)
        S = 0.5 * (S + S.T)
    return PatternLayer(ell, S)


def layer_by_enumeration(PQ, ell):
    """``S^(ell)`` summed explicitly over all ``2**ell`` patterns."""
    P, Q = _dense(PQ.P), _dense(PQ.Q)
    S = np.zeros((PQ.n, PQ.n))
    for psi in all_patterns(ell):
        X = apply_pattern(psi, P, Q)
        S += X @ X.T
    return S / 2.0 ** ell


def partial_sum(PQ, beta2, k):
    """``S_k = S_1 + (beta2/2)(P S_{k-1} P^T + Q S_{k-1} Q^T)``, ``S_1 = PP^T + QQ^T``."""
    if k < 1:
        raise InputError("k must be at least 1")
    if not 0 <= beta2 < 1:
        raise InputError("beta2 must lie in [0, 1)")
    S1 = _kernels.sandwich(PQ.P, np.eye(PQ.n)) + _kernels.sandwich(PQ.Q, np.eye(PQ.n))
    S1 = 0.5 * (S1 + S1.T)
    S = S1
    for _ in range(k - 1):
        S = S1 + beta2 * _step(PQ, S)
        S = 0.5 * (S + S.T)
    return SimilarityMatrix(S, "partial_sum")
