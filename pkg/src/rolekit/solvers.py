"""Fixed-point solvers for random-walk and neighbourhood-pattern similarity.

The random-walk similarity ``S*`` is the unique solution of

    S - (beta2/2) (P S P^T + Q S Q^T) = P P^T + Q Q^T,     0 <= beta2 < 1,

computed by the stepsize-controlled iteration
``Z <- P (I + beta2/2 Z) P^T + Q (I + beta2/2 Z) Q^T`` from ``Z = 0``.  The
iteration contracts by ``beta2`` in the entrywise max-norm, so a final step
``eps`` certifies ``||Z - S*||_max <= eps * beta2 / (1 - beta2)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ConvergenceError, InputError, ScaleCapError

log = logging.getLogger(__name__)

KINDS = ("rw_similarity", "nps", "structural", "degree_normalized", "partial_sum", "layer")
SYMMETRY_DRIFT_WARN = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    beta2: float = 0.2
    epsilon: float = 1e-8
    max_iters: int = 10_000
    max_n: int = 5_000

    def __post_init__(self):
        if not 0 <= self.beta2 < 1:
            raise InputError(f"beta2 must satisfy 0 <= beta2 < 1, got {self.beta2}")
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if self.max_iters < 1:
            raise InputError("max_iters must be positive")
        if self.max_n < 1:
            raise InputError("max_n must be positive")


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown similarity kind {self.kind!r}")

    @property
    def n(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_step: float
    residual: float
    error_bound: float
    converged: bool
    steps: tuple = field(default=(), repr=False)

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "final_step": self.final_step,
            "residual": self.residual,
            "error_bound": self.error_bound,
            "converged": self.converged,
        }


def _maxnorm(X):
    return float(np.max(np.abs(X))) if X.size else 0.0


def _symmetrize(Z, what):
    drift = _maxnorm(Z - Z.T)
    if drift > SYMMETRY_DRIFT_WARN * max(1.0, _maxnorm(Z)):
        log.warning("%s: symmetry drift %.3e before enforcement", what, drift)
    return 0.5 * (Z + Z.T)


def _check_size(n, cap):
    if n > cap:
        raise ScaleCapError(
            f"n={n} exceeds the dense-storage cap of {cap}; "
            "a low-rank compressed iteration would be needed and is not provided"
        )


def rw_fixed_point(P, Q, beta2, epsilon, max_iters, init=None, record=False, rhs=None):
    """Stepsize-controlled iteration for the random-walk equation.

    ``P`` and ``Q`` may be CSR or dense (the reduced block-model equation
    runs this same kernel with small dense matrices).  With ``rhs`` the
    iteration is ``Z <- rhs + (beta2/2)(P Z P^T + Q Z Q^T)`` instead, for
    equations whose right-hand side is not ``P P^T + Q Q^T``.  Returns the
    final iterate, the iteration count, the last max-norm step, a
    convergence flag and, when ``record`` is set, the full step history.
    """
    n = P.shape[0]
    I = np.eye(n)
    Z = np.zeros((n, n)) if init is None else np.array(init, dtype=float)
    half = 0.5 * beta2
    steps = []
    step = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        if rhs is None:
            T = I + half * Z
            Znew = _kernels.sandwich(P, T) + _kernels.sandwich(Q, T)
        else:
            Znew = rhs + half * (_kernels.sandwich(P, Z) + _kernels.sandwich(Q, Z))
        Znew = _symmetrize(Znew, "rw iteration")
        step = _maxnorm(Znew - Z)
        Z = Znew
        if record:
            steps.append(step)
        if step <= epsilon:
            return Z, it, step, True, tuple(steps)
    return Z, it, step, False, tuple(steps)


def residual_rw(S, PQ, beta2):
    """``||S - (beta2/2)(P S P^T + Q S Q^T) - (P P^T + Q Q^T)||_max``."""
    S = np.asarray(S, dtype=float)
    if S.shape != (PQ.n, PQ.n):
        raise InputError(f"S has shape {S.shape}, expected {(PQ.n, PQ.n)}")
    I = np.eye(PQ.n)
    lhs = S - 0.5 * beta2 * (_kernels.sandwich(PQ.P, S) + _kernels.sandwich(PQ.Q, S))
    rhs = _kernels.sandwich(PQ.P, I) + _kernels.sandwich(PQ.Q, I)
    return _maxnorm(lhs - rhs)


def solve_rw_similarity(PQ, cfg=None, init=None, record=False):
    """Solve the random-walk similarity equation; returns ``(S, report)``.

    When ``max_iters`` is exhausted the last iterate is returned with
    ``report.converged = False``; callers decide whether that is fatal.
    """
    cfg = cfg or SolverConfig()
    _check_size(PQ.n, cfg.max_n)
    Z, it, step, ok, steps = rw_fixed_point(
        PQ.P, PQ.Q, cfg.beta2, cfg.epsilon, cfg.max_iters, init=init, record=record
    )
    if not ok:
        log.warning("rw solver stopped after %d iterations with step %.3e", it, step)
    b = cfg.beta2
    report = SolveReport(
        iterations=it,
        final_step=step,
        residual=residual_rw(Z, PQ, b),
        error_bound=step * b / (1.0 - b),
        converged=ok,
        steps=steps,
    )
    return SimilarityMatrix(Z, "rw_similarity"), report


# ---------------------------------------------------------------------------
# structural baselines
# ---------------------------------------------------------------------------

def _adjacency(g, binarize):
    A = g.adjacency
    if binarize:
        A = A.copy()
        A.data = np.ones_like(A.data)
    return A


def baseline_structural(g, binarize=False):
    """``A A^T + A^T A``: common children plus common parents."""
    A = _adjacency(g, binarize)
    S = (A @ A.T + A.T @ A).toarray()
    return SimilarityMatrix(S, "structural")


def baseline_degree_normalized(g, binarize=False, allow_zero_degrees=False):
    """``D_out^-1 A A^T D_out^-1 + D_in^-1 A^T A D_in^-1``.

    With ``allow_zero_degrees`` a zero degree contributes a zero row/column
    (the 0/0 = 0 convention); otherwise it is an error.
    """
    A = _adjacency(g, binarize)
    d_out = np.asarray(A.sum(axis=1)).ravel()
    d_in = np.asarray(A.sum(axis=0)).ravel()
    if not allow_zero_degrees and (np.any(d_out <= 0) or np.any(d_in <= 0)):
        raise InputError("zero in- or out-degree; augment loops or allow zero degrees")
    with np.errstate(divide="ignore"):
        inv_out = np.where(d_out > 0, 1.0 / d_out, 0.0)
        inv_in = np.where(d_in > 0, 1.0 / d_in, 0.0)
    P = sp.diags(inv_out) @ A
    Q = sp.diags(inv_in) @ A.T
    S = (P @ P.T + Q @ Q.T).toarray()
    return SimilarityMatrix(0.5 * (S + S.T), "degree_normalized")


# ---------------------------------------------------------------------------
# neighbourhood pattern similarity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralEstimate:
    rho: float
    converged: bool
    iterations: int

    @property
    def beta2_threshold(self):
        return np.inf if self.rho == 0 else 1.0 / self.rho


def _nps_map(A, At, X):
    return _kernels.sandwich(A, X) + _kernels.sandwich(At, X)


def _power(A, At, X, tol, max_iters):
    # The map X -> A X A^T + A^T X A is self-adjoint in the Frobenius inner
    # product, so ||L(X_k)|| with ||X_k|| = 1 rises monotonically to rho even
    # when +rho and -rho are both eigenvalues.
    X = X / np.linalg.norm(X)
    prev = None
    for it in range(1, max_iters + 1):
        Y = _nps_map(A, At, X)
        est = float(np.linalg.norm(Y))
        if est == 0.0:
            return 0.0, True, it
        if prev is not None and abs(est - prev) <= tol * est:
            return est, True, it
        prev = est
        X = Y / est
    return prev, False, max_iters


def nps_spectral_bound(g, tol=1e-10, max_iters=10_000, seed=0):
    """Power-iteration estimate of ``rho(A (x) A + A^T (x) A^T)``.

    Works on n-by-n matrices only.  Starts from the normalized all-ones
    matrix and makes one restart from a random positive symmetric matrix;
    the larger estimate wins.
    """
    if g.n == 0:
        raise InputError("empty graph")
    A, At = g.adjacency, g.adjacency_t
    n = g.n
    best = _power(A, At, np.ones((n, n)), tol, max_iters)
    rng = np.random.Generator(np.random.Philox(key=seed))
    R = np.abs(rng.standard_normal((n, n)))
    alt = _power(A, At, R + R.T, tol, max_iters)
    if alt[0] > best[0] * (1 + 1e-9):
        best = alt
    rho, ok, it = best
    if not ok:
        log.warning("spectral radius estimate did not stagnate in %d iterations", max_iters)
    return SpectralEstimate(rho=rho, converged=ok, iterations=it)


def residual_nps(S, g, beta2):
    A, At = g.adjacency, g.adjacency_t
    S = np.asarray(S, dtype=float)
    S1 = _nps_map(A, At, np.eye(g.n))
    return _maxnorm(S - beta2 * _nps_map(A, At, S) - S1)


def solve_nps(g, beta2, cfg=None, check_bound=True, divergence_window=10):
    """Neighbourhood pattern similarity: ``S - beta2 (A S A^T + A^T S A) = A A^T + A^T A``.

    Iterates ``S <- S_1 + beta2 (A S A^T + A^T S A)`` from ``S_1`` and stops
    on a max-norm step of at most ``cfg.epsilon``.  The error bound in the
    report uses the Frobenius-norm contraction factor ``beta2 * rho``.
    """
    cfg = cfg or SolverConfig()
    if beta2 < 0:
        raise InputError("beta2 must be nonnegative")
    _check_size(g.n, cfg.max_n)
    est = nps_spectral_bound(g)
    if check_bound and beta2 * est.rho >= 1:
        raise ConvergenceError(
            f"beta2={beta2:g} is not below the convergence threshold "
            f"1/rho = {est.beta2_threshold:.6g} (rho = {est.rho:.6g})"
        )
    A, At = g.adjacency, g.adjacency_t
    S1 = _symmetrize(_nps_map(A, At, np.eye(g.n)), "nps S1")
    S = S1
    prev_step = np.inf
    growing = 0
    step = fro = 0.0
    ok = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        Snew = _symmetrize(S1 + beta2 * _nps_map(A, At, S), "nps iteration")
        diff = Snew - S
        step = _maxnorm(diff)
        fro = float(np.linalg.norm(diff))
        S = Snew
        if not np.isfinite(step):
            raise ConvergenceError(
                f"nps iteration overflowed; threshold 1/rho = {est.beta2_threshold:.6g}"
            )
        if step <= cfg.epsilon:
            ok = True
            break
        growing = growing + 1 if step > prev_step else 0
        if growing >= divergence_window:
            raise ConvergenceError(
                f"nps iteration diverging (step grew {divergence_window} times in a row); "
                f"beta2 must be below 1/rho = {est.beta2_threshold:.6g}"
            )
        prev_step = step
    q = beta2 * est.rho
    bound = fro * q / (1 - q) if q < 1 else np.inf
    report = SolveReport(
        iterations=it,
        final_step=step,
        residual=residual_nps(S, g, beta2),
        error_bound=bound,
        converged=ok,
    )
    return SimilarityMatrix(S, "nps"), report


# ---------------------------------------------------------------------------
# beta2 -> 1 limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LimitWeights:
    W: np.ndarray
    converged: bool
    iterations: int
    residual: float
    damped: bool


def _adjoint_map(PQ, W):
    # P^T W P = sandwich(P^T, W)
    return 0.5 * (_kernels.sandwich(PQ.Pt, W) + _kernels.sandwich(PQ.Qt, W))


def limit_weights(PQ, tol=1e-12, max_iters=200_000, window=100):
    """Unit-sum solution ``W`` of ``(P^T W P + Q^T W Q)/2 = W`` by power iteration.

    Switches to the damped map ``W -> (W + F(W))/2`` if the step stops
    shrinking (periodic chains); damping keeps the fixed points.
    """
    n = PQ.n
    W = np.full((n, n), 1.0 / n**2)
    W_prev = W
    damped = False
    steps = []
    ok = False
    it = 0
    for it in range(1, max_iters + 1):
        F = _adjoint_map(PQ, W)
        if damped:
            F = 0.5 * (W + F)
        F = 0.5 * (F + F.T)
        F /= F.sum()
        step = _maxnorm(F - W)
        W_prev, W = W, F
        steps.append(step)
        if step <= tol:
            ok = True
            break
        if not damped and it > 2 * window and step >= 0.999 * steps[-window - 1]:
            log.info("limit_weights: step stagnating at %.3e, switching to damped map", step)
            damped = True
    if not ok:
        W = 0.5 * (W + W_prev)
        W /= W.sum()
    residual = _maxnorm(_adjoint_map(PQ, W) - W)
    return LimitWeights(W=W, converged=ok, iterations=it, residual=residual, damped=damped)


@dataclass(frozen=True)
class LimitRow:
    beta2: float
    delta: float
    scale: float
    iterations: int

    @property
    def relative(self):
        return self.delta / self.scale if self.scale else np.inf


def verify_limit(PQ, beta2_list, epsilon=1e-10, weights=None):
    """Distance of ``(1 - beta2) S(beta2)`` from ``2 trace(W) 1 1^T`` per beta2."""
    lw = weights or limit_weights(PQ)
    n = PQ.n
    target = 2.0 * np.trace(lw.W) * np.ones((n, n))
    scale = _maxnorm(target)
    rows = []
    for b in beta2_list:
        # contraction is b per step; allow enough steps to reach epsilon
        iters = max(10_000, int(60.0 / max(1e-12, 1.0 - b)))
        S, rep = solve_rw_similarity(PQ, SolverConfig(beta2=b, epsilon=epsilon, max_iters=iters))
        if not rep.converged:
            raise ConvergenceError(f"solver did not converge for beta2={b}")
        rows.append(LimitRow(b, _maxnorm((1.0 - b) * S.values - target), scale, rep.iterations))
    return rows


def numerical_rank(S, tol=1e-8):
    """``#{sigma_i > tol * sigma_max}``."""
    s = np.linalg.svd(np.asarray(S, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))

