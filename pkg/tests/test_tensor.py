import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cats_hoi import tensor as tn
from cats_hoi.tensor import Tensor, finite_difference_check


def test_matmul_examples():
    x = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(tn.matmul(Tensor(np.eye(2)), x).data, x.data)
    assert np.array_equal(tn.matmul(x, Tensor([[5.0, 6.0], [7.0, 8.0]])).data, [[19, 22], [43, 50]])
    assert np.array_equal(tn.matmul(Tensor(np.zeros((2, 2))), x).data, np.zeros((2, 2)))


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(tn.ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        tn.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_activations():
    assert tn.tanh(Tensor(0.0)).item() == 0.0
    assert tn.leaky_relu(Tensor(-2.0), slope=0.2).item() == pytest.approx(-0.4, abs=1e-15)
    assert tn.sigmoid(Tensor(0.0)).item() == 0.5
    assert tn.activation(Tensor(0.0), "sigmoid").item() == 0.5
    with pytest.raises(ValueError):
        tn.activation(Tensor(0.0), "relu6")
    with pytest.raises(ValueError):
        tn.leaky_relu(Tensor(1.0), slope=1.5)


def test_leaky_relu_subgradient_at_zero_uses_positive_branch():
    x = Tensor(np.zeros(3), requires_grad=True)
    tn.leaky_relu(x).sum().backward()
    assert np.array_equal(x.grad, np.ones(3))


def test_softmax_examples():
    assert np.allclose(tn.softmax_last_axis(Tensor([0.0, 0.0, 0.0])).data, 1 / 3)
    big = tn.softmax_last_axis(Tensor([1000.0, 0.0])).data
    assert np.all(np.isfinite(big)) and big[0] == pytest.approx(1.0) and big[1] < 1e-300
    y = tn.softmax_last_axis(Tensor(np.log([2.0, 1.0, 1.0]))).data
    assert np.allclose(y, [0.5, 0.25, 0.25], atol=1e-15)


def test_softmax_mask():
    y = tn.softmax_last_axis(Tensor([[1.0, 2.0, 3.0]]), mask=np.array([[True, False, True]])).data
    assert y[0, 1] == 0.0
    assert y.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(tn.DegenerateSliceError):
        tn.softmax_last_axis(Tensor([[1.0, 2.0]]), mask=np.array([[False, False]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_softmax_slices_sum_to_one(rows, cols, seed):
    x = np.random.default_rng(seed).normal(scale=20, size=(rows, cols))
    y = tn.softmax_last_axis(Tensor(x)).data
    assert np.all(y >= 0)
    assert np.all(np.abs(y.sum(-1) - 1) < 1e-10)


def test_concat_examples():
    assert np.array_equal(tn.concat_last_axis(Tensor([1.0, 2.0]), Tensor([3.0])).data, [1, 2, 3])
    a, b = Tensor(np.ones((2, 3, 512))), Tensor(np.ones((2, 3, 256)))
    assert tn.concat_last_axis(a, b).shape == (2, 3, 768)
    x = Tensor(np.arange(6.0).reshape(2, 3))
    assert np.array_equal(tn.concat_last_axis(x, Tensor(np.zeros((2, 0)))).data, x.data)
    with pytest.raises(tn.ShapeError):
        tn.concat_last_axis(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 3))))


def test_backward_examples():
    x = Tensor([1.0, 2.0], requires_grad=True)
    x.sum().backward()
    assert np.array_equal(x.grad, [1, 1])
    x.grad = None
    (x * x).sum().backward()
    assert np.array_equal(x.grad, [2, 4])
    with pytest.raises(tn.ShapeError):
        (x * x).backward()


def test_fan_out_accumulates():
    x = Tensor(3.0, requires_grad=True)
    (x + x).backward()
    assert x.grad == 2.0


def test_gradients_accumulate_until_zeroed():
    x = Tensor([1.0], requires_grad=True)
    loss = (x * 3.0).sum()
    loss.backward()
    loss.backward()
    assert x.grad[0] == 6.0
    tn.zero_grad([x])
    assert x.grad is None


def test_replay_is_bit_identical():
    rng = np.random.default_rng(1)
    W = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    x = Tensor(rng.normal(size=(5, 4)))
    loss = tn.tanh(x @ W).sum()
    loss.backward()
    first = W.grad.copy()
    W.grad = None
    loss.backward()
    assert first.tobytes() == W.grad.tobytes()


def test_every_participating_tensor_gets_a_grad():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([3.0, 4.0], requires_grad=True)
    unused = Tensor([0.0], requires_grad=True)
    (a * b).sum().backward()
    assert a.grad is not None and b.grad is not None and unused.grad is None


def test_finite_difference_check_examples():
    x = Tensor(np.random.default_rng(0).normal(size=5))
    assert finite_difference_check(lambda t: t.sum(), x) < 1e-9
    assert finite_difference_check(lambda t: (t * t).sum(), Tensor([3.0])) < 1e-9
    with pytest.raises(ValueError):
        finite_difference_check(lambda t: t.sum(), x, step=0.0)
    with pytest.raises(FloatingPointError), np.errstate(invalid="ignore"):
        finite_difference_check(lambda t: tn.log(t).sum(), Tensor([-1.0]))


def test_tanh_wx_gradient():
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(3, 1)))
    W = Tensor(rng.normal(size=(4, 3)))
    assert finite_difference_check(lambda w: tn.tanh(w @ x).sum(), W, 1e-5) < 1e-4


def _weights(shape, rng):
    return Tensor(rng.normal(size=shape))


PRIMITIVES = {
    "add": lambda x, c: (x + c).sum(),
    "sub": lambda x, c: (c - x * x).sum(),
    "mul": lambda x, c: (x * c * x).sum(),
    "exp": lambda x, c: tn.exp(x * 0.3).sum(),
    "log": lambda x, c: tn.log(x * x + 1.0).sum(),
    "tanh": lambda x, c: (tn.tanh(x) * c).sum(),
    "sigmoid": lambda x, c: (tn.sigmoid(x) * c).sum(),
    "leaky_relu": lambda x, c: (tn.leaky_relu(x) * c).sum(),
    "matmul": lambda x, c: (x @ tn.swapaxes(c, 0, 1)).sum() * 0.1 + ((x @ tn.swapaxes(x, 0, 1)) * 0.1).sum(),
    "softmax": lambda x, c: (tn.softmax_last_axis(x) * c).sum(),
    "masked_softmax": lambda x, c: (tn.softmax_last_axis(x, mask=np.array([True, False, True, True])) * c).sum(),
    "concat": lambda x, c: (tn.concat_last_axis(x, x * 2.0) * tn.concat_last_axis(c, c)).sum(),
    "sum_axis": lambda x, c: (x.sum(axis=0) * c.sum(axis=0)).sum(),
    "mean": lambda x, c: (x.mean(axis=-1) * x.mean(axis=-1)).sum(),
    "reshape": lambda x, c: (x.reshape(4, 3) * c.reshape(4, 3)).sum(),
    "index": lambda x, c: (x[1:, ::2] * x[1:, ::2]).sum(),
    "cross_entropy": lambda x, c: tn.cross_entropy(x, np.array([0, 3, 1])),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients(name):
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    x = rng.normal(size=(3, 4))
    if name == "leaky_relu":
        x = np.where(np.abs(x) < 1e-3, 0.5, x)  # stay clear of the kink
    c = Tensor(rng.normal(size=(3, 4)))
    assert finite_difference_check(lambda t: PRIMITIVES[name](t, c), Tensor(x)) < 1e-4


def test_straight_through_forward_hard_backward_identity():
    soft = Tensor([[0.2, 0.7, 0.1], [0.5, 0.5, 0.0]], requires_grad=True)
    hard = tn.straight_through(soft)
    assert np.array_equal(hard.data, [[0, 1, 0], [1, 0, 0]])  # tie goes to the lower index
    (hard * Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])).sum().backward()
    assert np.array_equal(soft.grad, [[1, 2, 3], [4, 5, 6]])


@pytest.mark.parametrize("reverse", [False, True])
def test_gru_sequence_gradients(reverse):
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=(2, 4, 3)))
    w_x = Tensor(rng.normal(size=(3, 6)) * 0.5)
    w_h = Tensor(rng.normal(size=(2, 6)) * 0.5)
    b_x = Tensor(rng.normal(size=6) * 0.1)
    b_h = Tensor(rng.normal(size=6) * 0.1)
    weight = Tensor(rng.normal(size=(2, 4, 2)))
    args = [x, w_x, w_h, b_x, b_h]
    for k in range(5):
        def f(t, k=k):
            a = list(args)
            a[k] = t
            return (tn.gru_sequence(*a, reverse=reverse) * weight).sum()
        assert finite_difference_check(f, args[k]) < 1e-4


def test_gru_weight_shape_error():
    with pytest.raises(tn.ShapeError):
        tn.gru_sequence(Tensor(np.ones((1, 2, 3))), Tensor(np.ones((4, 6))), Tensor(np.ones((2, 6))),
                        Tensor(np.zeros(6)), Tensor(np.zeros(6)))
