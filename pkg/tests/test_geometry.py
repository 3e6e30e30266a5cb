import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cats_hoi.geometry import build_human_geometry, build_object_geometry
from cats_hoi.scene import OCCLUDED, SceneSequence

from conftest import make_scene


def scene_from(joints, boxes, width=1.0, height=1.0):
    joints = np.asarray(joints, dtype=float)
    boxes = np.asarray(boxes, dtype=float)
    T, H = joints.shape[:2]
    return SceneSequence("v", ("a",), joints, boxes, np.zeros((H, T), dtype=np.int64),
                         width=width, height=height)


def test_stationary_joint_has_zero_velocity():
    seq = scene_from(np.full((4, 1, 1, 2), 0.5), np.zeros((4, 1, 4)))
    assert np.array_equal(build_human_geometry(seq), np.tile([0.5, 0.5, 0.0, 0.0], (4, 1, 1)))


def test_moving_joint_backward_difference():
    seq = scene_from([[[[0.1, 0.1]]], [[[0.2, 0.3]]]], np.zeros((2, 1, 4)))
    hg = build_human_geometry(seq)
    assert np.allclose(hg[1, 0], [0.2, 0.3, 0.1, 0.2])
    assert np.array_equal(hg[0, 0, 2:], [0.0, 0.0])


def test_positions_normalised_by_frame_size():
    seq = scene_from([[[[320.0, 120.0]]]], [[[0.0, 0.0, 640.0, 480.0]]], width=640, height=480)
    assert np.allclose(build_human_geometry(seq)[0, 0, :2], [0.5, 0.25])
    assert np.allclose(build_object_geometry(seq)[0, :, :2], [[0, 0], [1, 1]])


def test_static_unit_box_rows():
    seq = scene_from(np.zeros((3, 1, 1, 2)), np.tile([0.0, 0.0, 1.0, 1.0], (3, 1, 1)))
    og = build_object_geometry(seq)
    assert og.shape == (3, 2, 4)
    assert np.array_equal(og[:, 0], np.tile([0, 0, 0, 0], (3, 1)))
    assert np.array_equal(og[:, 1], np.tile([1, 1, 0, 0], (3, 1)))


def test_translating_box_corners_share_velocity():
    boxes = np.array([[[0.1 + 0.05 * t, 0.2, 0.3 + 0.05 * t, 0.4]] for t in range(4)])
    og = build_object_geometry(scene_from(np.zeros((4, 1, 1, 2)), boxes))
    assert np.allclose(og[1:, :, 2:], np.tile([0.05, 0.0], (3, 2, 1)))


def test_shape_counts():
    seq = make_scene(T=3, H=2, J=15, O=3)
    assert build_human_geometry(seq).shape == (3, 30, 4)
    assert build_object_geometry(seq).shape == (3, 6, 4)


def test_empty_input_errors():
    seq = scene_from(np.zeros((0, 1, 1, 2)), np.zeros((0, 1, 4)))
    with pytest.raises(ValueError, match="empty"):
        build_human_geometry(seq)
    seq = scene_from(np.zeros((2, 1, 1, 2)), np.zeros((2, 0, 4)))
    with pytest.raises(ValueError, match="empty"):
        build_object_geometry(seq)


def test_occluded_joint_zero_filled_without_velocity():
    joints = np.array([[[[0.2, 0.2]]], [[[OCCLUDED, OCCLUDED]]], [[[0.4, 0.4]]], [[[0.5, 0.5]]]])
    hg = build_human_geometry(scene_from(joints, np.zeros((4, 1, 4))))
    assert np.array_equal(hg[1, 0], [0, 0, 0, 0])
    assert np.array_equal(hg[2, 0, 2:], [0, 0])  # previous frame invalid
    assert np.allclose(hg[3, 0, 2:], [0.1, 0.1])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 5), st.integers(1, 4), st.integers(0, 10**6))
def test_shape_contract_and_normalisation(T, H, J, O, seed):
    seq = make_scene(T=T, H=H, J=J, O=O, seed=seed, width=640.0, height=480.0)
    hg, og = build_human_geometry(seq), build_object_geometry(seq)
    assert hg.shape == (T, H * J, 4) and og.shape == (T, 2 * O, 4)
    assert np.all(hg[0, :, 2:] == 0) and np.all(og[0, :, 2:] == 0)
    assert np.all((hg[..., :2] >= 0) & (hg[..., :2] <= 1))
    assert np.all((og[..., :2] >= 0) & (og[..., :2] <= 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_time_reversal_negates_velocities(T, seed):
    seq = make_scene(T=T, H=2, J=3, O=2, seed=seed)
    rev = SceneSequence("r", seq.subject_ids, seq.joints[::-1].copy(), seq.boxes[::-1].copy(),
                        seq.labels[:, ::-1].copy(), width=seq.width, height=seq.height)
    for build in (build_human_geometry, build_object_geometry):
        fwd, bwd = build(seq), build(rev)
        # reversed velocity at frame t (t >= 2) is minus the original velocity at frame T - t + 2
        assert np.allclose(bwd[1:, :, 2:], -fwd[1:, :, 2:][::-1])
