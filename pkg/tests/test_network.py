from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dirsbm.network import (
    CompositionMatrix,
    NetworkError,
    WeightedNetwork,
    clr_rows,
    clr_transform,
    load_compositions,
    load_network,
    replace_zeros,
    to_compositions,
    write_dense_csv,
    write_edge_list,
)


def test_diagonal_is_forced_to_zero():
    net = WeightedNetwork(np.full((3, 3), 2.0))
    assert np.all(np.diag(net.weights) == 0)
    assert net.node_ids == ("1", "2", "3")


@pytest.mark.parametrize(
    "weights",
    [np.ones((2, 2)), np.ones((3, 4)), np.array([[0, 1, -1], [1, 0, 1], [1, 1, 0]]), np.array([[0, np.inf, 1], [1, 0, 1], [1, 1, 0]])],
)
def test_invalid_weights_rejected(weights):
    with pytest.raises(NetworkError):
        WeightedNetwork(weights)


def test_duplicate_ids_rejected():
    with pytest.raises(NetworkError):
        WeightedNetwork(np.ones((3, 3)), ("a", "a", "b"))


def test_replace_zeros_only_touches_zero_offdiagonal():
    w = np.array([[0, 0, 3.0], [1, 0, 0], [2, 5, 0]])
    out = replace_zeros(WeightedNetwork(w), 0.001).weights
    expect = np.array([[0, 0.001, 3.0], [1, 0, 0.001], [2, 5, 0]])
    np.testing.assert_array_equal(out, expect)


@pytest.mark.parametrize("eps", [0.0, -1e-3])
def test_replace_zeros_rejects_nonpositive_epsilon(eps):
    with pytest.raises(NetworkError):
        replace_zeros(WeightedNetwork(np.ones((3, 3))), eps)


def test_to_compositions_known_values():
    w = np.array([[0, 1.0, 3.0], [2.0, 0, 2.0], [1.0, 4.0, 0]])
    x = to_compositions(WeightedNetwork(w)).comp
    np.testing.assert_allclose(x, [[0, 0.25, 0.75], [0.5, 0, 0.5], [0.2, 0.8, 0]], rtol=0, atol=1e-15)


def test_to_compositions_requires_positive_weights():
    w = np.array([[0, 0, 3.0], [2.0, 0, 2.0], [1.0, 4.0, 0]])
    with pytest.raises(NetworkError, match="replace_zeros"):
        to_compositions(WeightedNetwork(w))
    w = np.array([[0, 0, 0.0], [2.0, 0, 2.0], [1.0, 4.0, 0]])
    with pytest.raises(NetworkError, match="all-zero"):
        to_compositions(WeightedNetwork(w))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(0, 1e3)), st.floats(1e-6, 1.0))
def test_compositions_are_row_stochastic(w, eps):
    comp = to_compositions(replace_zeros(WeightedNetwork(w), eps))
    assert np.max(np.abs(comp.comp.sum(axis=1) - 1)) <= 1e-12
    assert np.all(np.diag(comp.comp) == 0)
    off = ~np.eye(6, dtype=bool)
    assert np.all(comp.comp[off] > 0)


def test_composition_matrix_validation():
    x = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
    CompositionMatrix(x)
    with pytest.raises(NetworkError):
        CompositionMatrix(x * 1.01)
    bad = x.copy()
    bad[0, 0] = 1e-3
    with pytest.raises(NetworkError):
        CompositionMatrix(bad)


def test_star_drops_diagonal():
    x = np.array([[0, 0.2, 0.8], [0.5, 0, 0.5], [0.1, 0.9, 0]])
    comp = CompositionMatrix(x)
    np.testing.assert_array_equal(comp.star(1), [0.5, 0.5])
    np.testing.assert_array_equal(comp.star_matrix(), [[0.2, 0.8], [0.5, 0.5], [0.1, 0.9]])
    assert np.all(np.diag(comp.log_comp) == 0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (7, 7), elements=st.floats(1e-3, 1e3)))
def test_clr_rows_are_zero_centred(w):
    comp = to_compositions(WeightedNetwork(w))
    u = clr_transform(comp).u
    assert np.all(np.diag(u) == 0)
    np.testing.assert_allclose(u.sum(axis=1), 0, atol=1e-10)
    # CLR is scale invariant
    np.testing.assert_allclose(clr_rows(comp.star_matrix() * 3.7), clr_rows(comp.star_matrix()), atol=1e-12)


def test_clr_of_equal_parts_is_zero():
    x = np.full((4, 4), 1 / 3)
    np.fill_diagonal(x, 0)
    np.testing.assert_allclose(clr_transform(CompositionMatrix(x)).u, 0, atol=1e-15)


def test_edge_list_roundtrip(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text("src,dst,weight\n# comment\na,b,2\nb,c,1.5\nc,a,4\na,a,9\na,c,0\n")
    net = load_network(p)
    assert net.node_ids == ("a", "b", "c")
    np.testing.assert_array_equal(net.weights, [[0, 2, 0], [0, 0, 1.5], [4, 0, 0]])
    q = tmp_path / "again.csv"
    write_edge_list(q, net)
    np.testing.assert_array_equal(load_network(q).weights, net.weights)


def test_edge_list_errors(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("src,dst,weight\na,b,2\na,b,3\nb,c,1\n")
    with pytest.raises(NetworkError, match="duplicate"):
        load_network(p)
    p.write_text("src,dst,weight\na,b,-2\nb,c,1\n")
    with pytest.raises(NetworkError, match="negative"):
        load_network(p)
    p.write_text("src,dst,weight\na,b,x\nb,c,1\n")
    with pytest.raises(NetworkError, match="parse"):
        load_network(p)


def test_dense_roundtrip(tmp_path):
    w = np.array([[0, 1.25, 3], [2, 0, 2], [1, 4, 0]])
    p = tmp_path / "m.csv"
    write_dense_csv(p, w, ["x", "y", "z"])
    net = load_network(p)
    assert net.node_ids == ("x", "y", "z")
    np.testing.assert_array_equal(net.weights, w)
    comp = to_compositions(net)
    q = tmp_path / "c.csv"
    write_dense_csv(q, comp.comp, comp.node_ids, digits=17)
    np.testing.assert_allclose(load_compositions(q).comp, comp.comp, rtol=1e-15)


def test_dense_id_mismatch(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(",a,b,c\na,0,1,1\nb,1,0,1\nq,1,1,0\n")
    with pytest.raises(NetworkError, match="differ"):
        load_network(p)
