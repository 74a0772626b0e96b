import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rolekit as rk
from rolekit.errors import InputError, ZeroDegreeError

from conftest import random_digraph


def test_load_toy_graph(toy):
    assert toy.n == 6
    assert toy.num_arcs == 8
    assert toy.index_base == 1
    assert toy.label(0) == "1"


def test_header_only_gives_isolated_nodes():
    g = rk.load_edge_list("n=3\n")
    assert g.n == 3 and g.num_arcs == 0


def test_duplicates_are_summed():
    g = rk.load_edge_list(["0 1 2.0", "0 1 3.0"])
    assert g.num_arcs == 1
    assert g.dense()[0, 1] == 5.0


def test_comments_and_blank_lines_skipped():
    g = rk.load_edge_list("# producers\n\n0 1\n1 0  # back\n")
    assert g.num_arcs == 2


@pytest.mark.parametrize("text", ["0 1 -1", "0 x", "0 1 nan", "-1 0", "0", "0 1 1 1"])
def test_bad_lines_rejected(text):
    with pytest.raises(InputError):
        rk.load_edge_list(text)


def test_index_out_of_range_with_header():
    with pytest.raises(InputError):
        rk.load_edge_list("n=2\n0 2\n")


def test_one_based_rejects_zero():
    with pytest.raises(InputError):
        rk.load_edge_list("0 1", index_base=1)


def test_degrees_toy(toy):
    d = rk.degrees(toy)
    assert d.d_out[1] == 3
    assert d.d_in[1] == 2


def test_degrees_empty_and_loop():
    d = rk.degrees(rk.Digraph.from_arcs(3, []))
    assert not d.d_in.any() and not d.d_out.any()
    d = rk.degrees(rk.Digraph.from_arcs(2, [(1, 1, 2.5)]))
    assert d.d_in[1] == d.d_out[1] == 2.5


def test_strong_connectivity_examples(toy):
    cycle = rk.Digraph.from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    assert rk.is_strongly_connected(cycle)
    assert not rk.is_strongly_connected(toy)
    assert not rk.is_strongly_connected(rk.augment_loops(toy))


def _closure_strong(A):
    n = A.shape[0]
    R = (A > 0) | np.eye(n, dtype=bool)
    for k in range(n):
        R = R | (R[:, [k]] & R[[k], :])
    return bool(R.all())


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda n: st.lists(st.booleans(), min_size=n * n, max_size=n * n).map(
        lambda bits: np.array(bits, dtype=float).reshape(n, n))))
def test_strong_connectivity_matches_closure(A):
    assert rk.is_strongly_connected(rk.Digraph.from_dense(A)) == _closure_strong(A)


def test_augment_loops_examples(toy):
    g = rk.augment_loops(rk.Digraph.from_arcs(2, []))
    d = rk.degrees(g)
    assert d.d_in.tolist() == [1, 1] and d.d_out.tolist() == [1, 1]
    assert rk.graph.has_positive_degrees(rk.augment_loops(toy))
    g = rk.augment_loops(rk.Digraph.from_arcs(2, [(0, 0, 2.0)]))
    assert g.dense()[0, 0] == 3.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 5.0))
def test_augment_adds_w_to_degrees(seed, w):
    g = random_digraph(5, np.random.default_rng(seed), loops=False)
    d0, d1 = rk.degrees(g), rk.degrees(rk.augment_loops(g, w))
    np.testing.assert_array_equal(d1.d_in, d0.d_in + w)
    np.testing.assert_array_equal(d1.d_out, d0.d_out + w)


def test_transition_pair_examples(toy_aug):
    PQ = rk.transition_pair(rk.Digraph.from_arcs(2, [(0, 1, 1.0), (1, 0, 1.0)]))
    swap = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(PQ.P.toarray(), swap)
    np.testing.assert_array_equal(PQ.Q.toarray(), swap)
    PQ = rk.transition_pair(rk.Digraph.from_arcs(1, [(0, 0, 3.0)]))
    assert PQ.P.toarray().tolist() == [[1.0]] and PQ.Q.toarray().tolist() == [[1.0]]
    row = rk.transition_pair(toy_aug).P.toarray()[1]
    np.testing.assert_allclose(row, [0, 0.25, 0.25, 0, 0.25, 0.25])


def test_transition_pair_zero_degree_names_node(toy):
    with pytest.raises(ZeroDegreeError, match="node 3"):
        rk.transition_pair(toy)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_transition_rows_stochastic(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) * (rng.random((n, n)) < 0.5) + np.eye(n)
    g = rk.Digraph.from_dense(A)
    PQ = rk.transition_pair(g)
    for M, ref in ((PQ.P, A), (PQ.Q, A.T)):
        D = M.toarray()
        assert np.abs(D.sum(axis=1) - 1).max() <= 1e-12
        assert ((D > 0) == (ref > 0)).all()
        assert D.min() >= 0 and D.max() <= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 1]))
def test_edge_list_round_trip(seed, base):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 3, (5, 5)) * (rng.random((5, 5)) < 0.4)
    g = rk.Digraph.from_dense(A, index_base=base)
    h = rk.load_edge_list(rk.write_edge_list(g), index_base=base)
    assert h.n == g.n
    np.testing.assert_array_equal(h.dense(), g.dense())
    assert rk.write_edge_list(h) == rk.write_edge_list(g)


def test_arcs_sorted_and_readonly(toy):
    arcs = list(toy.arcs())
    assert arcs == sorted(arcs)
    with pytest.raises(ValueError):
        toy.adjacency.data[0] = 7.0


def test_all_pairs_enumeration_small():
    # every 2-node digraph: strong iff both directions present
    for bits in itertools.product([0, 1], repeat=4):
        A = np.array(bits, dtype=float).reshape(2, 2)
        assert rk.is_strongly_connected(rk.Digraph.from_dense(A)) == bool(A[0, 1] and A[1, 0])
