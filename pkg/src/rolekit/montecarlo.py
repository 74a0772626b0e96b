"""Generalized random walks and Monte-Carlo estimates of meeting probabilities.

Randomness is counter-based: trials are processed in fixed chunks and chunk
``c`` of a run keyed by ``seed`` draws from ``Philox(key=(seed, c))``, so
every trial's uniforms depend only on the seed and its trial index.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError
from .patterns import WalkPattern

CHUNK = 8192


@dataclass(frozen=True)
class WalkTrial:
    pattern: WalkPattern
    start: int
    end: int


def _key(seed, chunk):
    seed = int(seed)
    if not 0 <= seed < 1 << 64:
        raise InputError("seed must be an integer in [0, 2**64)")
    return (seed << 64) | int(chunk)


def chunk_generator(seed, chunk):
    return np.random.Generator(np.random.Philox(key=_key(seed, chunk)))


def random_pattern(ell, rng):
    """Uniformly random pattern of length ``ell`` (each letter a fair coin)."""
    if ell < 1:
        raise InputError("pattern length must be at least 1")
    bits = rng.integers(0, 2, size=ell)
    return WalkPattern("".join("dr"[b] for b in bits))


@dataclass(frozen=True, eq=False)
class _Sampler:
    """CSR rows of P and Q with within-row cumulative probabilities."""

    p_indptr: np.ndarray
    p_indices: np.ndarray
    p_cum: np.ndarray
    q_indptr: np.ndarray
    q_indices: np.ndarray
    q_cum: np.ndarray

    @classmethod
    def from_pair(cls, PQ):
        def cums(M):
            cum = np.empty_like(M.data)
            for i in range(M.shape[0]):
                lo, hi = M.indptr[i], M.indptr[i + 1]
                cum[lo:hi] = np.cumsum(M.data[lo:hi])
            return (np.ascontiguousarray(M.indptr, dtype=np.int64),
                    np.ascontiguousarray(M.indices, dtype=np.int64), cum)

        return cls(*cums(PQ.P), *cums(PQ.Q))

    def walk(self, start, letters, u):
        return _kernels.walk(self.p_indptr, self.p_indices, self.p_cum,
                             self.q_indptr, self.q_indices, self.q_cum, start, letters, u)


def step(PQ, current, letter, rng):
    """One move: along an out-arc (``'d'``, row of P) or an in-arc (``'r'``, row of Q)."""
    M = PQ.P if letter == "d" else PQ.Q
    lo, hi = M.indptr[current], M.indptr[current + 1]
    if lo == hi:
        raise InputError(f"node {current} has no {'outgoing' if letter == 'd' else 'incoming'} arcs")
    cum = np.cumsum(M.data[lo:hi])
    k = min(int(np.searchsorted(cum, rng.random(), side="right")), hi - lo - 1)
    return int(M.indices[lo + k])


def simulate_walk(PQ, start, pattern, rng):
    pattern = pattern if isinstance(pattern, WalkPattern) else WalkPattern(pattern)
    v = start
    for letter in pattern:
        v = step(PQ, v, letter, rng)
    return WalkTrial(pattern, start, v)


def endpoint_samples(PQ, start, pattern, trials, seed):
    """Endpoints of ``trials`` independent walks with a fixed pattern."""
    pattern = pattern if isinstance(pattern, WalkPattern) else WalkPattern(pattern)
    ell = len(pattern)
    letters_row = np.array([0 if c == "d" else 1 for c in pattern], dtype=np.uint8)
    sampler = _Sampler.from_pair(PQ)
    out = []
    for c, lo in enumerate(range(0, trials, CHUNK)):
        m = min(CHUNK, trials - lo)
        u = chunk_generator(seed, c).random((m, ell))
        out.append(sampler.walk(start, np.broadcast_to(letters_row, (m, ell)), u))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def meeting_probability(PQ, i, j, ell, trials, seed, sampler=None):
    """Estimate the probability that walkers from ``i`` and ``j`` meet after ``ell`` steps.

    Each trial draws one uniform pattern shared by both walkers; their moves
    use independent uniforms.  Returns ``(estimate, stderr)`` with the
    binomial standard error.
    """
    if trials < 1:
        raise InputError("trials must be positive")
    if ell < 1:
        raise InputError("ell must be at least 1")
    for node in (i, j):
        if not 0 <= node < PQ.n:
            raise InputError(f"node {node} out of range")
    sampler = sampler or _Sampler.from_pair(PQ)
    hits = 0
    for c, lo in enumerate(range(0, trials, CHUNK)):
        m = min(CHUNK, trials - lo)
        block = chunk_generator(seed, c).random((m, 3 * ell))
        letters = (block[:, :ell] >= 0.5).astype(np.uint8)
        ends_i = sampler.walk(i, letters, block[:, ell:2 * ell])
        ends_j = sampler.walk(j, letters, block[:, 2 * ell:])
        hits += int(np.count_nonzero(ends_i == ends_j))
    p = hits / trials
    return p, float(np.sqrt(p * (1.0 - p) / trials))


def cell_seed(seed, i, j, ell):
    """Independent per-cell seed derived from a master seed."""
    if int(seed) < 0:
        raise InputError("seed must be non-negative")
    return int(np.random.SeedSequence([int(seed), int(i), int(j), int(ell)]).generate_state(1, np.uint64)[0])
