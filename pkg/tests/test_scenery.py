import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cats_hoi import tensor as tn
from cats_hoi.scenery import GatLayer, SceneryGat, attention_rows, gat_forward, scene_nodes
from cats_hoi.tensor import Tensor, finite_difference_check


def _layer(dim, seed=0, heads=1):
    return GatLayer(dim, np.random.default_rng(seed), heads=heads)


def test_node_axis_layout():
    h = Tensor(np.ones((2, 30, 768)))
    o = Tensor(np.zeros((2, 6, 768)))
    v = scene_nodes(h, o)
    assert v.shape == (2, 36, 768)
    assert np.all(v.data[:, :30] == 1) and np.all(v.data[:, 30:] == 0)


def test_identical_nodes_give_uniform_attention():
    v = Tensor(np.tile(np.random.default_rng(0).normal(size=6), (3, 5, 1)))
    layer = _layer(6)
    for t in (1, 2, 3):
        assert np.abs(attention_rows(layer, v, t) - 0.2).max() <= 1e-12


def test_single_node_graph():
    layer = _layer(4)
    v = Tensor(np.random.default_rng(1).normal(size=(2, 1, 4)))
    assert np.array_equal(attention_rows(layer, v, 1), [[1.0]])
    assert np.allclose(gat_forward(layer, v).data, np.tanh(v.data @ layer.theta[0].data), atol=1e-15)


def test_two_node_hand_case():
    layer = _layer(2)
    layer.theta[0].data = np.eye(2)
    layer.att[0].data = np.ones((4, 1))
    v = Tensor(np.array([[[1.0, 0.0], [0.0, 1.0]]]))
    assert np.array_equal(attention_rows(layer, v, 1), [[0.5, 0.5], [0.5, 0.5]])


def test_duplicate_keys_get_equal_weight():
    x = np.random.default_rng(2).normal(size=(1, 5, 3))
    x[0, 3] = x[0, 1]
    alpha = attention_rows(_layer(3, seed=3), Tensor(x), 1)
    assert np.allclose(alpha[:, 1], alpha[:, 3], atol=1e-15)


def test_frame_out_of_range():
    with pytest.raises(IndexError):
        attention_rows(_layer(2), Tensor(np.zeros((2, 3, 2))), 3)
    with pytest.raises(IndexError):
        attention_rows(_layer(2), Tensor(np.zeros((2, 3, 2))), 0)


def test_degenerate_neighbourhood():
    edges = np.ones((3, 3), dtype=bool)
    edges[1] = False
    with pytest.raises(tn.DegenerateSliceError):
        gat_forward(_layer(2), Tensor(np.zeros((1, 3, 2))), edges)


def test_self_edges_only_degenerates_to_per_node_transform():
    layer = _layer(4, seed=5)
    v = Tensor(np.random.default_rng(6).normal(size=(3, 6, 4)))
    out = gat_forward(layer, v, np.eye(6, dtype=bool)).data
    assert np.allclose(out, np.tanh(v.data @ layer.theta[0].data), atol=1e-15)


def test_masked_pairs_get_exactly_zero():
    edges = np.eye(4, dtype=bool)
    edges[0, 2] = True
    alpha = attention_rows(_layer(3), Tensor(np.random.default_rng(0).normal(size=(1, 4, 3))), 1, edges)
    assert np.all(alpha[~edges] == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6))
def test_node_permutation_equivariance(n, seed):
    rng = np.random.default_rng(seed)
    layer = _layer(3, seed=seed)
    v = rng.normal(size=(2, n, 3))
    edges = rng.random((n, n)) < 0.6
    np.fill_diagonal(edges, True)
    perm = rng.permutation(n)
    out = gat_forward(layer, Tensor(v), edges).data
    out_p = gat_forward(layer, Tensor(v[:, perm]), edges[np.ix_(perm, perm)]).data
    assert np.allclose(out_p, out[:, perm], atol=1e-12)


def test_attention_is_per_frame():
    rng = np.random.default_rng(7)
    v = rng.normal(size=(2, 4, 3))
    layer = _layer(3, seed=1)
    a1, a2 = attention_rows(layer, Tensor(v), 1), attention_rows(layer, Tensor(v), 2)
    assert not np.allclose(a1, a2)
    assert np.array_equal(a2, attention_rows(layer, Tensor(v[1:]), 1))


@pytest.mark.parametrize("heads", [1, 2])
def test_gat_gradients(heads):
    rng = np.random.default_rng(8)
    gat = SceneryGat(4, rng, heads=heads)
    v = Tensor(rng.normal(size=(2, 5, 4)))
    weight = Tensor(rng.normal(size=(2, 5, 4)))
    assert finite_difference_check(lambda t: (gat(t) * weight).sum(), v) < 1e-4
    for name, p in gat.parameters().items():
        assert finite_difference_check(lambda _: (gat(v) * weight).sum(), p) < 1e-4, name
