"""Compare the numba and numpy paths of each hot kernel.

Run: python3 benchmarks/bench_kernels.py [--repeat 5] [--n 400]

Both paths are called directly, so the ROLEKIT_NUMBA flag does not matter
here.  Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

import rolekit as rk
from rolekit import _kernels
from rolekit.montecarlo import _Sampler


def best_of(fn, repeat):
    fn()  # warm-up / JIT compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    A = sp.random(n, n, density=8 / n, random_state=rng, format="csr") + sp.identity(n, format="csr")
    A = sp.csr_matrix(A)
    X = rng.standard_normal((n, n))
    yield "csr x dense", (
        lambda: _kernels.csr_dense_numpy(A.indptr, A.indices, A.data, X),
        lambda: _kernels.csr_dense_numba(A.indptr, A.indices, A.data, X),
    )

    s = _Sampler.from_pair(rk.transition_pair(rk.Digraph(A)))
    trials, ell = 200_000, 4
    letters = rng.integers(0, 2, (trials, ell)).astype(np.uint8)
    u = rng.random((trials, ell))
    args = (s.p_indptr, s.p_indices, s.p_cum, s.q_indptr, s.q_indices, s.q_cum, np.int64(0), letters, u)
    yield "random walks", (lambda: _kernels.walk_numpy(*args), lambda: _kernels.walk_numba(*args))

    R = rng.standard_normal((n, n))
    C = R[rng.choice(n, 8, replace=False)].copy()
    yield "k-means assign", (lambda: _kernels.assign_numpy(R, C), lambda: _kernels.assign_numba(R, C))

    PQ = rk.transition_pair(rk.Digraph(A))
    cfg = rk.SolverConfig(beta2=0.5, epsilon=1e-8)

    def solve(flag):
        def run():
            old = _kernels.USE_NUMBA
            _kernels.USE_NUMBA = flag
            try:
                rk.solve_rw_similarity(PQ, cfg)
            finally:
                _kernels.USE_NUMBA = old
        return run

    yield "rw solve (end to end)", (solve(False), solve(True))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"n={args.n} repeat={args.repeat} numba threads={__import__('numba').get_num_threads()}")
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, (f_np, f_nb) in cases(args.n, rng):
        t_np, t_nb = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
        print(f"{name:<24}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
