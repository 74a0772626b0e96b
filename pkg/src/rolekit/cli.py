"""Command-line interface: ``rolekit {solve,roles,sbm,mc}``.

Exit codes: 0 ok, 1 input error, 2 convergence failure, 3 resource cap.
"""

import argparse
import logging
import sys
import time

import numpy as np

from . import io
from .blockmodel import (
    average_matrix,
    canonical_order,
    load_model,
    sample_adjacency,
    verify_recovery,
)
from .errors import ConvergenceError, InputError, RolekitError, ScaleCapError
from .graph import (
    augment_loops,
    has_positive_degrees,
    read_edge_list,
    transition_pair,
    write_edge_list,
)
from .montecarlo import _Sampler, cell_seed, meeting_probability
from .patterns import layer
from .roles import consensus, estimate_role_matrix, kmeans
from .solvers import (
    SolverConfig,
    baseline_degree_normalized,
    baseline_structural,
    solve_nps,
    solve_rw_similarity,
)

log = logging.getLogger("rolekit")


def _notice(msg):
    print(f"rolekit: {msg}", file=sys.stderr)


def _loops_arg(text):
    if text in ("auto", "off"):
        return text
    try:
        w = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--loops takes auto, off or a positive weight") from None
    if not w > 0:
        raise argparse.ArgumentTypeError("loop weight must be positive")
    return w


def _seed_arg(text):
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= seed < 1 << 64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return seed


def _prepare(g, loops, strict, needs_degrees=True):
    """Apply the loop policy; returns the graph and the loop weight added (0 if none)."""
    if loops == "off":
        return g, 0.0
    if loops == "auto":
        if not needs_degrees or has_positive_degrees(g):
            return g, 0.0
        if strict:
            raise InputError("graph has zero-degree nodes and --strict forbids adding loops")
        _notice("zero in- or out-degree found; adding unit loops to every node")
        return augment_loops(g, 1.0), 1.0
    return augment_loops(g, loops), float(loops)


def _check_cap(n, cap):
    if n > cap:
        raise ScaleCapError(f"n={n} exceeds --max-n={cap} (dense similarity storage)")


def _seed_from(seed, *salt):
    return int(np.random.SeedSequence([int(seed), *map(int, salt)]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------

def cmd_solve(args):
    t0 = time.perf_counter()
    g = read_edge_list(args.edges, index_base=args.index_base)
    _check_cap(g.n, args.max_n)
    needs = args.method in ("rw", "degnorm")
    g, loops = _prepare(g, args.loops, args.strict, needs_degrees=needs)
    cfg = SolverConfig(beta2=args.beta2 if args.method == "rw" else 0.0,
                       epsilon=args.epsilon, max_iters=args.max_iters, max_n=args.max_n)
    report = {"method": args.method, "n": g.n, "arcs": g.num_arcs, "loops_added": loops}
    status = 0
    if args.method == "rw":
        S, rep = solve_rw_similarity(transition_pair(g), cfg)
        report.update(beta2=args.beta2, epsilon=args.epsilon, **rep.as_dict())
        if not rep.converged:
            status = ConvergenceError.exit_code
    elif args.method == "nps":
        S, rep = solve_nps(g, args.beta2, cfg, check_bound=not args.no_bound_check)
        report.update(beta2=args.beta2, epsilon=args.epsilon, **rep.as_dict())
        if not rep.converged:
            status = ConvergenceError.exit_code
    elif args.method == "structural":
        S = baseline_structural(g, binarize=args.binarize)
    else:
        S = baseline_degree_normalized(g, binarize=args.binarize,
                                       allow_zero_degrees=args.allow_zero_degrees)
    out = args.out
    files = [f"{out}.similarity.csv", f"{out}.report.json", f"{out}.report.txt"]
    io.write_text(files[0], io.matrix_to_csv(S.values))
    io.write_json(files[1], report)
    io.write_text(files[2], io.report_text(report))
    if args.heatmap:
        files.append(f"{out}.heatmap.pgm")
        io.write_text(files[-1], io.heatmap_pgm(S.values))
    params = {k: v for k, v in vars(args).items() if k != "func"}
    io.write_json(f"{out}.manifest.json",
                  io.manifest("solve", params, inputs=[args.edges], outputs=files,
                              wall_time=time.perf_counter() - t0))
    if status:
        _notice(f"solver did not converge in {args.max_iters} iterations")
    return status


def cmd_roles(args):
    t0 = time.perf_counter()
    g0 = read_edge_list(args.edges, index_base=args.index_base)
    _check_cap(g0.n, args.max_n)
    g, loops = _prepare(g0, args.loops, args.strict)
    cfg = SolverConfig(beta2=args.beta2, epsilon=args.epsilon, max_iters=args.max_iters,
                       max_n=args.max_n)
    S, rep = solve_rw_similarity(transition_pair(g), cfg)
    if not rep.converged:
        raise ConvergenceError(f"similarity solver did not converge in {args.max_iters} iterations")
    runs = [
        kmeans(S.values, args.k, seed=_seed_from(args.seed, r), restarts=args.restarts,
               normalize=args.normalize_rows)
        for r in range(args.runs)
    ]
    cons = consensus(runs)
    roles = cons.labels
    from .roles import RoleAssignment

    B_hat = estimate_role_matrix(g0, RoleAssignment(roles, args.k), binarize=not args.weighted)
    order = canonical_order(roles)
    pattern = (g0.dense() != 0).astype(float)[np.ix_(order, order)]
    out = args.out
    files = [f"{out}.roles.txt", f"{out}.counts.csv", f"{out}.role_matrix.csv",
             f"{out}.pattern.pgm", f"{out}.similarity.csv"]
    io.write_text(files[0], io.roles_to_text(g0, roles))
    io.write_text(files[1], io.counts_to_csv(g0, cons.counts))
    io.write_text(files[2], io.matrix_to_csv(B_hat))
    io.write_text(files[3], io.heatmap_pgm(pattern, invert=True))
    io.write_text(files[4], io.matrix_to_csv(S.values))
    params = {k: v for k, v in vars(args).items() if k != "func"}
    io.write_json(f"{out}.manifest.json",
                  io.manifest("roles", params, inputs=[args.edges], seeds={"seed": args.seed},
                              outputs=files, wall_time=time.perf_counter() - t0))
    sizes = np.bincount(roles, minlength=args.k)
    print(f"roles: k={args.k} sizes={sizes.tolist()} loops_added={loops} "
          f"iterations={rep.iterations}")
    return 0


def cmd_sbm(args):
    t0 = time.perf_counter()
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh.read())
    out = args.out
    files = []
    if args.mode == "sample":
        if args.seed is None:
            raise InputError("--seed is required for sampling")
        for s in range(args.samples):
            g = sample_adjacency(model, _seed_from(args.seed, s))
            files.append(f"{out}.sample_{s:03d}.edges")
            io.write_text(files[-1], write_edge_list(g, index_base=args.index_base))
    elif args.mode == "average":
        files.append(f"{out}.average.csv")
        io.write_text(files[-1], io.matrix_to_csv(average_matrix(model).dense()))
    else:
        rep = verify_recovery(model, args.beta2)
        doc = {"beta2": args.beta2, **rep.as_dict()}
        files.append(f"{out}.verify.json")
        io.write_json(files[-1], doc)
        print(io.report_text(doc), end="")
    params = {k: v for k, v in vars(args).items() if k != "func"}
    io.write_json(f"{out}.manifest.json",
                  io.manifest("sbm", params, inputs=[args.model], seeds={"seed": args.seed},
                              outputs=files, wall_time=time.perf_counter() - t0))
    return 0


def _parse_pairs(text, n, base):
    if text == "all":
        return [(i, j) for i in range(n) for j in range(n)]
    pairs = []
    for item in text.replace(";", " ").split():
        try:
            a, b = (int(x) - base for x in item.split(","))
        except ValueError:
            raise InputError(f"bad pair {item!r}; expected i,j") from None
        if not (0 <= a < n and 0 <= b < n):
            raise InputError(f"pair {item!r} out of range")
        pairs.append((a, b))
    return pairs


def cmd_mc(args):
    t0 = time.perf_counter()
    g = read_edge_list(args.edges, index_base=args.index_base)
    g, _ = _prepare(g, args.loops, args.strict)
    PQ = transition_pair(g)
    pairs = _parse_pairs(args.pairs, g.n, args.index_base)
    sampler = _Sampler.from_pair(PQ)
    lines = ["i,j,ell,estimate,stderr,closed_form,z_score"]
    for ell in args.ell:
        closed = layer(PQ, ell).matrix
        for i, j in pairs:
            est, se = meeting_probability(PQ, i, j, ell, args.trials,
                                          cell_seed(args.seed, i, j, ell), sampler=sampler)
            diff = est - closed[i, j]
            z = diff / se if se > 0 else (0.0 if abs(diff) < 1e-12 else float("inf"))
            lines.append(",".join([g.label(i), g.label(j), str(ell), io.fmt(est), io.fmt(se),
                                   io.fmt(closed[i, j]), io.fmt(z)]))
    text = "\n".join(lines) + "\n"
    if args.out:
        path = f"{args.out}.mc.csv"
        io.write_text(path, text)
        params = {k: v for k, v in vars(args).items() if k != "func"}
        io.write_json(f"{args.out}.manifest.json",
                      io.manifest("mc", params, inputs=[args.edges], seeds={"seed": args.seed},
                                  outputs=[path], wall_time=time.perf_counter() - t0))
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="rolekit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_opts(sp, loops_default="auto"):
        sp.add_argument("edges", help="edge list: 'src dst [weight]' per line, optional 'n=<int>' header")
        sp.add_argument("--index-base", type=int, choices=(0, 1), default=0)
        sp.add_argument("--loops", type=_loops_arg, default=loops_default,
                        help="auto (add unit loops only if needed), off, or a loop weight")
        sp.add_argument("--strict", action="store_true", help="never add loops automatically")

    def solver_opts(sp):
        sp.add_argument("--beta2", type=float, default=0.2)
        sp.add_argument("--epsilon", type=float, default=1e-8)
        sp.add_argument("--max-iters", type=int, default=10_000)
        sp.add_argument("--max-n", type=int, default=5_000)

    s = sub.add_parser("solve", help="compute a similarity matrix")
    graph_opts(s)
    solver_opts(s)
    s.add_argument("--method", choices=("rw", "nps", "structural", "degnorm"), default="rw")
    s.add_argument("--binarize", action="store_true", help="baselines on the 0/1 adjacency")
    s.add_argument("--allow-zero-degrees", action="store_true")
    s.add_argument("--no-bound-check", action="store_true",
                   help="skip the nps spectral-radius precheck")
    s.add_argument("--heatmap", action="store_true")
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("roles", help="extract roles by clustering similarity rows")
    graph_opts(r)
    solver_opts(r)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--runs", type=int, default=20, help="independent clusterings for the consensus")
    r.add_argument("--restarts", type=int, default=1, help="k-means++ restarts per clustering")
    r.add_argument("--seed", type=_seed_arg, required=True)
    r.add_argument("--normalize-rows", action="store_true")
    r.add_argument("--weighted", action="store_true",
                   help="role matrix from summed weights instead of the 0/1 adjacency")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_roles)

    m = sub.add_parser("sbm", help="block-model sampling, average matrices and recovery checks")
    m.add_argument("model", help="JSON model file with B, sizes and optional corrections")
    m.add_argument("--mode", choices=("sample", "average", "verify"), required=True)
    m.add_argument("--seed", type=_seed_arg)
    m.add_argument("--samples", type=int, default=1)
    m.add_argument("--beta2", type=float, default=0.5)
    m.add_argument("--index-base", type=int, choices=(0, 1), default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_sbm)

    c = sub.add_parser("mc", help="Monte-Carlo meeting probabilities vs closed form")
    graph_opts(c)
    c.add_argument("--ell", type=int, nargs="+", required=True)
    c.add_argument("--pairs", default="all", help="'all' or 'i,j;i,j' in input labels")
    c.add_argument("--trials", type=int, default=100_000)
    c.add_argument("--seed", type=_seed_arg, required=True)
    c.add_argument("--out", help="output prefix (CSV to stdout if omitted)")
    c.set_defaults(func=cmd_mc)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except RolekitError as exc:
        _notice(str(exc))
        return exc.exit_code
    except OSError as exc:
        _notice(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
