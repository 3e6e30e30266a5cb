"""Raw geometric node features: position and velocity per keypoint / box corner.

Channel layout of every row is ``(pos_x, pos_y, vel_x, vel_y)``.  Positions are
divided by the frame width/height; velocity is the backward difference, zero on
the first frame.  Occluded joints are zero-filled and carry zero velocity, both
on the frame they vanish and on the frame after.
"""

from __future__ import annotations

import numpy as np

from .scene import OCCLUDED, SceneSequence


def _position_velocity(points: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """``points`` is (T, N, 2) normalised; ``valid`` is (T, N)."""
    pos = np.where(valid[..., None], points, 0.0)
    vel = np.zeros_like(pos)
    vel[1:] = pos[1:] - pos[:-1]
    both = np.zeros_like(valid)
    both[1:] = valid[1:] & valid[:-1]
    vel = np.where(both[..., None], vel, 0.0)
    return np.concatenate([pos, vel], axis=-1)


def _check_nonempty(seq: SceneSequence, what: str, n: int) -> None:
    if seq.T == 0 or n == 0:
        raise ValueError(f"{seq.video_id}: empty input for {what} geometry (T={seq.T}, count={n})")


def build_human_geometry(seq: SceneSequence) -> np.ndarray:
    """Return (T, H*J, 4); rows are ordered person-major then joint."""
    _check_nonempty(seq, "human", seq.H)
    T, H, J, _ = seq.joints.shape
    scale = np.array([seq.width, seq.height])
    pts = seq.joints.reshape(T, H * J, 2)
    valid = ~np.any(pts == OCCLUDED, axis=-1)
    return _position_velocity(pts / scale, valid)


def box_corners(boxes: np.ndarray) -> np.ndarray:
    """(T, O, 4) boxes -> (T, 2*O, 2) corners, (x1, y1) then (x2, y2) per object."""
    T, O, _ = boxes.shape
    return boxes.reshape(T, O, 2, 2).reshape(T, 2 * O, 2)


def build_object_geometry(seq: SceneSequence) -> np.ndarray:
    """Return (T, 2*O, 4) for the two diagonal corners of every box."""
    _check_nonempty(seq, "object", seq.O)
    scale = np.array([seq.width, seq.height])
    pts = box_corners(seq.boxes) / scale
    valid = np.ones(pts.shape[:2], dtype=bool)
    return _position_velocity(pts, valid)
