"""Synthetic multi-person HOI videos, a line-delimited dataset format, and subject folds.

The generator mirrors the layout of two-person HOI benchmarks: subjects come in
fixed pairs, each video shows one pair with a handful of objects, and every
human follows a scripted sequence of sub-activities.  Each sub-activity gives
the joints a class-specific constant velocity pattern (its sign alternates
between consecutive segments so tracks stay in frame), moves the object that
the class is tied to, and selects class prototypes for the visual vectors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .scene import OCCLUDED, SceneSequence

SCHEMA_VERSION = 1


@dataclass
class ScenarioSpec:
    num_subjects: int = 16
    humans: int = 2
    objects: Tuple[int, int] = (2, 4)
    joints: int = 15
    frames: Tuple[int, int] = (80, 120)
    num_classes: int = 4
    # each script is an ordered list of sub-activity ids; durations per segment
    scripts: Tuple[Tuple[int, ...], ...] = ((0, 1, 2, 3), (2, 0, 3, 1), (1, 3, 0, 2))
    durations: Tuple[int, int] = (18, 40)
    videos_per_group: int = 3
    motion_noise: float = 0.5
    velocity_scale: float = 1.5
    occlusion: float = 0.0
    visual_dim: int = 32
    visual_noise: float = 1.0
    width: float = 640.0
    height: float = 480.0
    seed: int = 42

    def validate(self) -> None:
        if min(self.num_subjects, self.humans, self.joints, self.num_classes,
               self.visual_dim, self.videos_per_group) <= 0:
            raise ValueError("scenario counts must be positive")
        if self.num_subjects % self.humans:
            raise ValueError(f"{self.num_subjects} subjects cannot be grouped by {self.humans} humans")
        if not 1 <= self.objects[0] <= self.objects[1]:
            raise ValueError(f"bad object range {self.objects}")
        if not 1 <= self.frames[0] <= self.frames[1]:
            raise ValueError(f"bad frame range {self.frames}")
        if not 1 <= self.durations[0] <= self.durations[1]:
            raise ValueError(f"bad duration range {self.durations}")
        for s in self.scripts:
            if not s or any(not 0 <= c < self.num_classes for c in s):
                raise ValueError(f"script {s} uses ids outside [0, {self.num_classes})")
            if len(s) * self.durations[0] > self.frames[1]:
                raise ValueError(f"script {s} needs at least {len(s) * self.durations[0]} frames, "
                                 f"more than the maximum {self.frames[1]}")


def default_scenario(seed: int = 42) -> ScenarioSpec:
    return ScenarioSpec(seed=seed)


def hard_scenario(seed: int = 42) -> ScenarioSpec:
    """Short segments, many classes, weak visual cue: an untrained model scores near zero."""
    return ScenarioSpec(num_subjects=8, num_classes=10,
                        scripts=((0, 1, 2, 3, 4, 5, 6, 7, 8, 9), (5, 2, 8, 0, 7, 3, 9, 1, 6, 4),
                                 (9, 7, 5, 3, 1, 8, 6, 4, 2, 0)),
                        durations=(6, 14), videos_per_group=2, motion_noise=1.0,
                        occlusion=0.05, visual_noise=3.0, seed=seed)


def subject_groups(spec: ScenarioSpec) -> List[Tuple[str, ...]]:
    n = spec.humans
    return [tuple(f"s{g * n + h:02d}" for h in range(n)) for g in range(spec.num_subjects // n)]


def _label_track(rng: np.random.Generator, script: Sequence[int], T: int, durations) -> np.ndarray:
    labels = np.empty(T, dtype=np.int64)
    t, i = 0, int(rng.integers(len(script)))
    while t < T:
        d = int(rng.integers(durations[0], durations[1] + 1))
        labels[t:t + d] = script[i % len(script)]
        t += d
        i += 1
    return labels


def _segment_sign(labels: np.ndarray) -> np.ndarray:
    """+1/-1 per frame, flipping at every label change."""
    change = np.concatenate([[0], (labels[1:] != labels[:-1]).astype(int)])
    return np.where(np.cumsum(change) % 2 == 0, 1.0, -1.0)


def synthesize(spec: ScenarioSpec) -> List[SceneSequence]:
    spec.validate()
    root = np.random.default_rng(spec.seed)
    C, J, D, H = spec.num_classes, spec.joints, spec.visual_dim, spec.humans
    # class-level templates, drawn once from the scenario seed
    joint_vel = root.normal(size=(C, J, 2)) * spec.velocity_scale
    pose = np.stack([root.uniform(-40, 40, size=J), np.linspace(-80, 80, J)], axis=-1)
    box_vel = root.normal(size=(C, 2)) * spec.velocity_scale
    proto_h = root.normal(size=(C, D))
    proto_o = root.normal(size=(C + 1, D))  # last row: object not in use
    groups = subject_groups(spec)
    video_seeds = root.integers(0, 2**63 - 1, size=len(groups) * spec.videos_per_group)

    out = []
    for gi, subjects in enumerate(groups):
        for v in range(spec.videos_per_group):
            rng = np.random.default_rng(int(video_seeds[gi * spec.videos_per_group + v]))
            T = int(rng.integers(spec.frames[0], spec.frames[1] + 1))
            O = int(rng.integers(spec.objects[0], spec.objects[1] + 1))
            script = spec.scripts[int(rng.integers(len(spec.scripts)))]
            labels = np.stack([_label_track(rng, script, T, spec.durations) for _ in range(H)])

            joints = np.empty((T, H, J, 2))
            for h in range(H):
                centre = np.array([spec.width * (h + 1) / (H + 1), spec.height / 2])
                vel = joint_vel[labels[h]] * _segment_sign(labels[h])[:, None, None]  # (T,J,2)
                vel[0] = 0.0
                joints[:, h] = centre + pose + np.cumsum(vel, axis=0)
            joints += rng.normal(size=joints.shape) * spec.motion_noise

            boxes = np.empty((T, O, 4))
            owner = labels[0]  # objects respond to the first human's sub-activity
            for o in range(O):
                cx = spec.width * (o + 1) / (O + 1)
                cy = spec.height * 0.75
                active = (owner % O) == o
                vel = np.where(active[:, None], box_vel[owner] * _segment_sign(owner)[:, None], 0.0)
                vel[0] = 0.0
                c = np.array([cx, cy]) + np.cumsum(vel, axis=0)
                half = rng.uniform(15, 30, size=2)
                boxes[:, o, :2] = c - half
                boxes[:, o, 2:] = c + half
            boxes += rng.normal(size=(T, O, 1)) * spec.motion_noise
            lo = np.array([0.0, 0.0, 0.0, 0.0])
            hi = np.array([spec.width, spec.height, spec.width, spec.height])
            boxes = np.clip(boxes, lo, hi)
            joints = np.clip(joints, 0.0, [spec.width, spec.height])

            if spec.occlusion > 0:
                occ = rng.random(size=(T, H, J)) < spec.occlusion
                joints[occ] = OCCLUDED

            vis_h = proto_h[labels.T] + rng.normal(size=(T, H, D)) * spec.visual_noise
            obj_class = np.where((owner[:, None] % O) == np.arange(O)[None, :], owner[:, None], C)
            vis_o = proto_o[obj_class] + rng.normal(size=(T, O, D)) * spec.visual_noise

            seq = SceneSequence(video_id=f"v{gi:02d}_{v:02d}", subject_ids=subjects,
                                joints=joints, boxes=boxes, labels=labels,
                                visual_human=vis_h, visual_object=vis_o,
                                width=float(spec.width), height=float(spec.height))
            seq.validate(C)
            out.append(seq)
    return out


# -- serialisation -----------------------------------------------------------------
class DatasetParseError(ValueError):
    def __init__(self, line: int, path: str, msg: str):
        super().__init__(f"line {line}: {path}: {msg}")
        self.line = line
        self.path = path


def _record(seq: SceneSequence) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "video_id": seq.video_id,
        "subject_ids": list(seq.subject_ids),
        "T": seq.T, "H": seq.H, "J": seq.J, "O": seq.O,
        "width": seq.width, "height": seq.height,
        "joints": seq.joints.tolist(),
        "boxes": seq.boxes.tolist(),
        "labels": seq.labels.tolist(),
        "visual_human": None if seq.visual_human is None else seq.visual_human.tolist(),
        "visual_object": None if seq.visual_object is None else seq.visual_object.tolist(),
    }


def save_dataset(path, data: Iterable[SceneSequence]) -> None:
    """One JSON record per video, then a footer record carrying the count."""
    n = 0
    with open(path, "w") as fh:
        for seq in data:
            fh.write(json.dumps(_record(seq)) + "\n")
            n += 1
        fh.write(json.dumps({"version": SCHEMA_VERSION, "end": True, "count": n}) + "\n")


def _array(rec: dict, key: str, shape: tuple, dtype, line: int) -> np.ndarray:
    if key not in rec:
        raise DatasetParseError(line, key, "missing field")
    try:
        arr = np.array(rec[key], dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise DatasetParseError(line, key, f"not a numeric array ({exc})") from None
    if arr.shape != shape:
        raise DatasetParseError(line, key, f"shape {arr.shape}, expected {shape}")
    return arr


def _parse(rec: dict, line: int) -> SceneSequence:
    for key in ("video_id", "subject_ids", "T", "H", "J", "O"):
        if key not in rec:
            raise DatasetParseError(line, key, "missing field")
    if rec.get("version") != SCHEMA_VERSION:
        raise DatasetParseError(line, "version", f"unsupported schema version {rec.get('version')!r}")
    T, H, J, O = (int(rec[k]) for k in ("T", "H", "J", "O"))
    vis = {}
    for key, n in (("visual_human", H), ("visual_object", O)):
        if rec.get(key) is None:
            vis[key] = None
        else:
            raw = np.asarray(rec[key], dtype=np.float64)
            if raw.ndim != 3:
                raise DatasetParseError(line, key, f"expected 3 axes, got shape {raw.shape}")
            vis[key] = _array(rec, key, (T, n, raw.shape[-1]), np.float64, line)
    seq = SceneSequence(
        video_id=str(rec["video_id"]),
        subject_ids=tuple(str(s) for s in rec["subject_ids"]),
        joints=_array(rec, "joints", (T, H, J, 2), np.float64, line),
        boxes=_array(rec, "boxes", (T, O, 4), np.float64, line),
        labels=_array(rec, "labels", (H, T), np.int64, line),
        visual_human=vis["visual_human"], visual_object=vis["visual_object"],
        width=float(rec.get("width", 640.0)), height=float(rec.get("height", 480.0)),
    )
    try:
        seq.validate()
    except ValueError as exc:
        raise DatasetParseError(line, "record", str(exc)) from None
    return seq


def load_dataset(path) -> List[SceneSequence]:
    out: List[SceneSequence] = []
    footer = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            if footer is not None:
                raise DatasetParseError(lineno, "record", "data after the end-of-dataset record")
            if not raw.endswith("\n"):
                raise DatasetParseError(lineno, "record", "truncated line")
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(lineno, "record", f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise DatasetParseError(lineno, "record", "expected an object")
            if rec.get("end"):
                footer = (lineno, rec)
                continue
            out.append(_parse(rec, lineno))
    if footer is None:
        raise DatasetParseError(0, "end", "missing end-of-dataset record (file truncated?)")
    if footer[1].get("count") != len(out):
        raise DatasetParseError(footer[0], "count", f"footer says {footer[1].get('count')}, read {len(out)}")
    return out


# -- cross-validation -------------------------------------------------------------
@dataclass
class DatasetSplit:
    train: List[str]
    test: List[str]
    held_out: Tuple[str, ...]

    def checksum(self) -> str:
        payload = json.dumps([sorted(self.train), sorted(self.test), list(self.held_out)])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def name(self) -> str:
        return "+".join(self.held_out)


POLICIES = ("leave_one_subject_out", "leave_two_subjects_out")


def make_folds(data: Sequence[SceneSequence], policy: str) -> List[DatasetSplit]:
    """One fold per held-out subject, or per subject pair present in the data."""
    if policy == "leave_one_subject_out":
        groups = sorted({(s,) for seq in data for s in seq.subject_ids})
    elif policy == "leave_two_subjects_out":
        groups = set()
        for seq in data:
            subs = tuple(sorted(seq.subject_ids))
            if len(subs) != 2:
                raise ValueError(f"{seq.video_id}: leave-two-out needs paired subjects, got {subs}")
            groups.add(subs)
        groups = sorted(groups)
    else:
        raise ValueError(f"unknown fold policy {policy!r}; expected one of {POLICIES}")
    if len(groups) < 2:
        raise ValueError(f"{policy} needs at least two subject groups, found {len(groups)}")
    folds = []
    for held in groups:
        test = [s.video_id for s in data if set(held) & set(s.subject_ids)]
        train = [s.video_id for s in data if not set(held) & set(s.subject_ids)]
        folds.append(DatasetSplit(train=train, test=test, held_out=held))
    return folds
