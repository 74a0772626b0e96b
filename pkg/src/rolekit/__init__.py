"""Random-walk node similarity for directed weighted graphs and role extraction."""

__version__ = "0.1.0"

from .errors import ConvergenceError, InputError, RolekitError, ScaleCapError, ZeroDegreeError
from .graph import (
    DegreeInfo,
    Digraph,
    RowStochasticPair,
    augment_loops,
    degrees,
    is_strongly_connected,
    load_edge_list,
    read_edge_list,
    transition_pair,
    write_edge_list,
)
from .solvers import (
    LimitWeights,
    SimilarityMatrix,
    SolveReport,
    SolverConfig,
    baseline_degree_normalized,
    baseline_structural,
    limit_weights,
    nps_spectral_bound,
    numerical_rank,
    residual_rw,
    solve_nps,
    solve_rw_similarity,
    verify_limit,
)
from .patterns import (
    PatternLayer,
    WalkPattern,
    apply_pattern,
    count_walks,
    enumerate_walks,
    layer,
    partial_sum,
)
from .blockmodel import (
    BlockModel,
    average_matrix,
    membership,
    reduced_solve,
    sample_adjacency,
    verify_recovery,
)
from .roles import RoleAssignment, ari, consensus, estimate_role_matrix, kmeans
from .montecarlo import meeting_probability, random_pattern, step
