"""Stochastic block models, their average matrices and exact block recovery."""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError
from .graph import Digraph, transition_pair
from .solvers import (
    SolverConfig,
    numerical_rank,
    rw_fixed_point,
    solve_rw_similarity,
)


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Role matrix ``B`` (r x r), block sizes and optional degree corrections.

    The expected adjacency is ``A[i, j] = d1[i] * B[block(i), block(j)] * d2[j]``
    with nodes laid out block by block.
    """

    B: np.ndarray
    sizes: tuple
    d1: np.ndarray = None
    d2: np.ndarray = None

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        sizes = tuple(int(s) for s in self.sizes)
        if B.shape[0] != B.shape[1]:
            raise InputError(f"B must be square, got {B.shape}")
        if len(sizes) != B.shape[0]:
            raise InputError(f"{len(sizes)} block sizes for a {B.shape[0]}-block model")
        if not sizes or min(sizes) < 1:
            raise InputError("block sizes must be positive integers")
        if np.any(B < 0) or np.any(B > 1):
            raise InputError("entries of B must lie in [0, 1]")
        n = sum(sizes)
        d1 = np.ones(n) if self.d1 is None else np.asarray(self.d1, dtype=float)
        d2 = np.ones(n) if self.d2 is None else np.asarray(self.d2, dtype=float)
        for name, d in (("d1", d1), ("d2", d2)):
            if d.shape != (n,) or np.any(d <= 0):
                raise InputError(f"{name} must be a positive vector of length {n}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)

    @property
    def r(self):
        return self.B.shape[0]

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def block_of(self):
        return np.repeat(np.arange(self.r), self.sizes)

    @property
    def corrected(self):
        return not (np.all(self.d1 == 1.0) and np.all(self.d2 == 1.0))

    def has_empty_rows_or_columns(self):
        return bool(np.any(self.B.sum(axis=1) == 0) or np.any(self.B.sum(axis=0) == 0))

    def expected(self):
        blk = self.block_of
        return self.d1[:, None] * self.B[np.ix_(blk, blk)] * self.d2[None, :]

    def with_corrections(self, d1, d2):
        return BlockModel(self.B, self.sizes, d1, d2)

    def uncorrected(self):
        return BlockModel(self.B, self.sizes)


def halved_corrections(sizes):
    """Halve sending and receiving propensity for the first half of each block.

    Returns ``d`` with 0.5 on the first ``ceil(n_b / 2)`` nodes of every block
    and 1.0 elsewhere; use it for both ``d1`` and ``d2``.
    """
    d = []
    for nb in sizes:
        h = math.ceil(nb / 2)
        d.extend([0.5] * h + [1.0] * (nb - h))
    return np.asarray(d)


def random_corrections(n, seed, low=0.2, high=1.0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.uniform(low, high, n), rng.uniform(low, high, n)


# three-block benchmark model with cyclic roles, sizes 20/30/40
EXAMPLE_B = np.array([[0.3, 0.8, 0.1], [0.1, 0.3, 0.8], [0.8, 0.1, 0.3]])
EXAMPLE_SIZES = (20, 30, 40)


def example_model(corrections=None):
    m = BlockModel(EXAMPLE_B, EXAMPLE_SIZES)
    if corrections == "halved":
        d = halved_corrections(EXAMPLE_SIZES)
        m = m.with_corrections(d, d)
    return m


@dataclass(frozen=True, eq=False)
class MembershipMatrix:
    theta: np.ndarray
    block_of: np.ndarray


def membership(sizes):
    """Contiguous block layout with orthonormal columns ``chi_i / sqrt(n_i)``."""
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InputError("at least one block is required")
    if min(sizes) < 1:
        raise InputError("block sizes must be positive")
    blk = np.repeat(np.arange(len(sizes)), sizes)
    theta = np.zeros((blk.size, len(sizes)))
    theta[np.arange(blk.size), blk] = 1.0 / np.sqrt(np.asarray(sizes, dtype=float))[blk]
    return MembershipMatrix(theta=theta, block_of=blk)


def canonical_order(labels):
    """Stable permutation placing nodes block by block (block 0 first)."""
    return np.argsort(np.asarray(labels), kind="stable")


def average_matrix(model, for_sampling=False):
    A = model.expected()
    if for_sampling and (A.min() < 0 or A.max() > 1):
        raise InputError("expected adjacency has entries outside [0, 1]; cannot sample")
    return Digraph.from_dense(A)


def sample_adjacency(model, seed):
    """Bernoulli draw of the adjacency (loops included); Philox keyed by ``seed``."""
    A = model.expected()
    if A.max() > 1:
        raise InputError("expected adjacency has entries above 1; cannot sample")
    rng = np.random.Generator(np.random.Philox(key=seed))
    U = rng.random(A.shape)
    return Digraph.from_dense((U < A).astype(float))


@dataclass(frozen=True, eq=False)
class ReducedSolution:
    X: np.ndarray
    M: np.ndarray
    N: np.ndarray
    rhs: np.ndarray
    iterations: int
    residual: float


def reduced_solve(model, beta2, epsilon=1e-13, max_iters=100_000):
    """Solve ``X - (beta2/2)(M X M^T + N X N^T) = Theta^T (P P^T + Q Q^T) Theta``.

    ``M = Theta^T P Theta`` and ``N = Theta^T Q Theta`` come from the average
    matrix; the r-by-r equation is solved by the same fixed-point kernel as
    the full problem.
    """
    if not 0 <= beta2 < 1:
        raise InputError("beta2 must lie in [0, 1)")
    if model.has_empty_rows_or_columns():
        raise InputError("B has an all-zero row or column")
    PQ = transition_pair(average_matrix(model))
    theta = membership(model.sizes).theta
    P, Q = PQ.P.toarray(), PQ.Q.toarray()
    M = theta.T @ P @ theta
    N = theta.T @ Q @ theta
    rhs = theta.T @ (P @ P.T + Q @ Q.T) @ theta
    rhs = 0.5 * (rhs + rhs.T)
    # rhs differs from M M^T + N N^T when d2 (or d1) varies inside a block
    X, it, _, ok, _ = rw_fixed_point(M, N, beta2, epsilon, max_iters, rhs=rhs)
    if not ok:
        raise ConvergenceError(f"reduced equation did not converge in {max_iters} iterations")
    resid = float(np.max(np.abs(X - 0.5 * beta2 * (M @ X @ M.T + N @ X @ N.T) - rhs)))
    return ReducedSolution(X=X, M=M, N=N, rhs=rhs, iterations=it, residual=resid)


@dataclass(frozen=True, eq=False)
class RecoveryReport:
    gap: float
    block_row_discrepancy: float
    rank: int
    r: int
    passed: bool
    S: np.ndarray
    X: np.ndarray
    uncorrected_gap: float = None

    def as_dict(self):
        out = {
            "gap": self.gap,
            "block_row_discrepancy": self.block_row_discrepancy,
            "rank": self.rank,
            "r": self.r,
            "pass": self.passed,
        }
        if self.uncorrected_gap is not None:
            out["uncorrected_gap"] = self.uncorrected_gap
        return out


def block_row_discrepancy(S, block_of):
    """Largest difference between a row of ``S`` and the first row of its block."""
    S = np.asarray(S)
    worst = 0.0
    for b in np.unique(block_of):
        rows = S[block_of == b]
        worst = max(worst, float(np.max(np.abs(rows - rows[0]))))
    return worst


def verify_recovery(model, beta2, epsilon=1e-12, tol=1e-8, rank_tol=1e-8):
    """Compare ``S*`` of the average matrix with ``Theta X Theta^T``.

    For corrected models the report also carries the max-norm distance
    between ``S*`` and ``S*`` of the uncorrected model.
    """
    PQ = transition_pair(average_matrix(model))
    cfg = SolverConfig(beta2=beta2, epsilon=epsilon, max_iters=100_000)
    S, _ = solve_rw_similarity(PQ, cfg)
    red = reduced_solve(model, beta2)
    theta = membership(model.sizes).theta
    gap = float(np.max(np.abs(S.values - theta @ red.X @ theta.T)))
    disc = block_row_discrepancy(S.values, model.block_of)
    rank = numerical_rank(S.values, rank_tol)
    uncorrected_gap = None
    if model.corrected:
        S0, _ = solve_rw_similarity(transition_pair(average_matrix(model.uncorrected())), cfg)
        uncorrected_gap = float(np.max(np.abs(S.values - S0.values)))
    passed = gap <= tol and disc <= tol and rank == model.r
    return RecoveryReport(gap, disc, rank, model.r, passed, S.values, red.X, uncorrected_gap)


# ---------------------------------------------------------------------------
# model description files
# ---------------------------------------------------------------------------

def load_model(text):
    """Parse a JSON model description.

    Keys: ``B`` (row-major list of rows), ``sizes``, optional ``r`` (checked),
    and optional ``corrections``: ``"halved"``, ``{"random": seed}`` or
    ``{"d1": [...], "d2": [...]}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "B" not in doc or "sizes" not in doc:
        raise InputError("model file needs keys 'B' and 'sizes'")
    model = BlockModel(doc["B"], doc["sizes"])
    if "r" in doc and int(doc["r"]) != model.r:
        raise InputError(f"r={doc['r']} does not match B of size {model.r}")
    corr = doc.get("corrections")
    if corr is None:
        return model
    if corr == "halved":
        d = halved_corrections(model.sizes)
        return model.with_corrections(d, d)
    if isinstance(corr, dict) and "random" in corr:
        d1, d2 = random_corrections(model.n, int(corr["random"]))
        return model.with_corrections(d1, d2)
    if isinstance(corr, dict) and ("d1" in corr or "d2" in corr):
        return model.with_corrections(corr.get("d1"), corr.get("d2"))
    raise InputError(f"unrecognized corrections entry {corr!r}")


def dump_model(model):
    doc = {"r": model.r, "B": model.B.tolist(), "sizes": list(model.sizes)}
    if model.corrected:
        doc["corrections"] = {"d1": model.d1.tolist(), "d2": model.d2.tolist()}
    return json.dumps(doc, indent=2)
