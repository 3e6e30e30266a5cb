import numpy as np
import pytest

from cats_hoi.scene import SceneSequence


def make_scene(T=2, H=1, J=3, O=1, D=5, seed=0, width=1.0, height=1.0, num_classes=3) -> SceneSequence:
    """Random in-frame scene on a unit canvas."""
    rng = np.random.default_rng(seed)
    joints = rng.uniform(0.1, 0.9, size=(T, H, J, 2)) * [width, height]
    lo = rng.uniform(0.0, 0.4, size=(T, O, 2))
    hi = lo + rng.uniform(0.1, 0.5, size=(T, O, 2))
    boxes = np.concatenate([lo, hi], axis=-1) * [width, height, width, height]
    labels = rng.integers(0, num_classes, size=(H, T))
    return SceneSequence(video_id=f"toy{seed}", subject_ids=tuple(f"s{h}" for h in range(H)),
                         joints=joints, boxes=boxes, labels=labels,
                         visual_human=rng.normal(size=(T, H, D)), visual_object=rng.normal(size=(T, O, D)),
                         width=width, height=height)


@pytest.fixture
def toy_scene():
    return make_scene()


def random_timeline_pair(rng: np.random.Generator, max_segments: int = 12, num_classes: int = 4):
    """Ground truth plus a boundary-jittered, occasionally relabelled prediction of it."""
    from cats_hoi.metrics import timeline_from_labels

    n = int(rng.integers(1, max_segments + 1))
    lengths = rng.integers(2, 15, size=n)
    labels = np.repeat(rng.integers(0, num_classes, size=n), lengths)
    pred = labels.copy()
    cuts = np.cumsum(lengths)[:-1]
    for c in cuts:
        shift = int(rng.integers(-3, 4))
        lo, hi = sorted((c, c + shift))
        lo, hi = max(lo, 0), min(hi, len(pred))
        pred[lo:hi] = labels[c - 1] if shift > 0 else labels[c]
    flips = rng.random(len(pred)) < 0.03
    pred[flips] = rng.integers(0, num_classes, size=flips.sum())
    gt_tl = timeline_from_labels(labels)
    pred_tl = timeline_from_labels(pred)
    while len(pred_tl) > max_segments:  # smooth away isolated flips until the oracle can take it
        i = int(np.flatnonzero(pred != labels)[0])
        pred[i] = labels[i]
        pred_tl = timeline_from_labels(pred)
    return pred_tl, gt_tl


# one (criterion, passed, detail) entry per acceptance check, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
