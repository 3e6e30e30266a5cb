"""Per-video container shared by the feature builders and the data harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

OCCLUDED = -1.0


@dataclass
class SceneSequence:
    """One video: ``T`` frames of ``H`` skeletons and ``O`` object boxes.

    ``joints`` is ``(T, H, J, 2)`` in pixels, with occluded joints stored as
    ``OCCLUDED`` in both coordinates.  ``boxes`` is ``(T, O, 4)`` as
    ``(x1, y1, x2, y2)``.  ``labels`` is ``(H, T)`` sub-activity ids.
    """

    video_id: str
    subject_ids: Tuple[str, ...]
    joints: np.ndarray
    boxes: np.ndarray
    labels: np.ndarray
    visual_human: Optional[np.ndarray] = None
    visual_object: Optional[np.ndarray] = None
    width: float = 640.0
    height: float = 480.0
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.joints.shape[0]

    @property
    def H(self) -> int:
        return self.joints.shape[1]

    @property
    def J(self) -> int:
        return self.joints.shape[2]

    @property
    def O(self) -> int:  # noqa: E743
        return self.boxes.shape[1]

    def validate(self, num_classes: Optional[int] = None) -> None:
        T = self.joints.shape[0]
        if self.joints.ndim != 4 or self.joints.shape[-1] != 2:
            raise ValueError(f"{self.video_id}: joints must be (T, H, J, 2), got {self.joints.shape}")
        if self.boxes.ndim != 3 or self.boxes.shape[0] != T or self.boxes.shape[-1] != 4:
            raise ValueError(f"{self.video_id}: boxes must be (T, O, 4), got {self.boxes.shape}")
        if self.labels.shape != (self.H, T):
            raise ValueError(f"{self.video_id}: labels must be (H, T)={(self.H, T)}, got {self.labels.shape}")
        if np.any(self.boxes[..., 0] > self.boxes[..., 2]) or np.any(self.boxes[..., 1] > self.boxes[..., 3]):
            raise ValueError(f"{self.video_id}: box with x1 > x2 or y1 > y2")
        if num_classes is not None and (self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= num_classes):
            raise ValueError(f"{self.video_id}: label outside [0, {num_classes})")
        for name, arr, n in (("visual_human", self.visual_human, self.H),
                             ("visual_object", self.visual_object, self.O)):
            if arr is not None and (arr.ndim != 3 or arr.shape[:2] != (T, n)):
                raise ValueError(f"{self.video_id}: {name} must be (T, {n}, D), got {arr.shape}")

    def equals(self, other: "SceneSequence") -> bool:
        """Bit-exact equality on every field."""
        if (self.video_id, tuple(self.subject_ids), self.width, self.height) != \
                (other.video_id, tuple(other.subject_ids), other.width, other.height):
            return False
        for a, b in ((self.joints, other.joints), (self.boxes, other.boxes), (self.labels, other.labels),
                     (self.visual_human, other.visual_human), (self.visual_object, other.visual_object)):
            if (a is None) != (b is None):
                return False
            if a is not None and (a.shape != b.shape or a.dtype != b.dtype or a.tobytes() != b.tobytes()):
                return False
        return True
