import numpy as np
import pytest

from cats_hoi import tensor as tn
from cats_hoi.optim import Adam


def test_first_step_moves_each_coordinate_by_lr():
    w = tn.parameter(np.array([1.0, -2.0, 3.0]))
    opt = Adam({"w": w}, lr=0.1, clip_norm=0)
    (w * w).sum().backward()
    opt.step()
    # bias-corrected first step is lr * sign(grad)
    assert np.allclose(w.data, [0.9, -1.9, 2.9], atol=1e-7)


def test_clipping_rescales_large_gradients():
    w = tn.parameter(np.zeros(2))
    opt = Adam({"w": w}, lr=0.1, clip_norm=5.0)
    w.grad = np.array([30.0, 40.0])
    assert opt.step() == pytest.approx(50.0)
    assert np.allclose(opt.m["w"], 0.1 * np.array([3.0, 4.0]))  # moments see the clipped gradient


def test_converges_on_a_quadratic():
    target = np.array([0.5, -1.5])
    w = tn.parameter(np.zeros(2))
    opt = Adam({"w": w}, lr=0.05)
    for _ in range(500):
        opt.zero_grad()
        d = w - tn.as_tensor(target)
        (d * d).sum().backward()
        opt.step()
    assert np.allclose(w.data, target, atol=1e-3)


def test_parameters_without_grad_are_left_alone():
    a, b = tn.parameter(np.ones(2)), tn.parameter(np.ones(2))
    opt = Adam({"a": a, "b": b}, lr=0.1)
    (a * 2.0).sum().backward()
    opt.step()
    assert np.array_equal(b.data, np.ones(2)) and not np.array_equal(a.data, np.ones(2))
