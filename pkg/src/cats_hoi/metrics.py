"""Segmental F1@k with IoU matching, an exhaustive oracle, and fold aggregation.

Timelines are lists of :class:`Segment` with 1-based inclusive frame bounds,
sorted, non-overlapping, and with equal-label neighbours merged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

THRESHOLDS = (0.10, 0.25, 0.50)
ORACLE_LIMIT = 12


class Segment(NamedTuple):
    label: int
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


Timeline = List[Segment]


class TimelineError(ValueError):
    pass


def timeline_from_labels(labels: Sequence[int], background: Optional[int] = None) -> Timeline:
    """Run-length encode frame labels; ``background`` runs are dropped."""
    labels = np.asarray(labels)
    out: Timeline = []
    if labels.size == 0:
        return out
    change = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [labels.size]]) - 1
    for s, e in zip(starts, ends):
        lab = int(labels[s])
        if background is not None and lab == background:
            continue
        out.append(Segment(lab, int(s) + 1, int(e) + 1))
    return out


def is_canonical(tl: Sequence[Segment]) -> bool:
    prev = None
    for seg in tl:
        if seg.start > seg.end:
            return False
        if prev is not None:
            if seg.start <= prev.end:
                return False
            if seg.label == prev.label and seg.start == prev.end + 1:
                return False
        prev = seg
    return True


def _require_canonical(tl: Sequence[Segment], name: str) -> None:
    if not is_canonical(tl):
        raise TimelineError(f"{name} timeline is not canonical: {list(tl)}")


def iou(a: Segment, b: Segment) -> float:
    inter = min(a.end, b.end) - max(a.start, b.start) + 1
    if inter <= 0:
        return 0.0
    union = max(a.end, b.end) - min(a.start, b.start) + 1
    return inter / union


@dataclass
class F1Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "F1Counts") -> "F1Counts":
        return F1Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def as_tuple(self) -> Tuple[int, int, int, float]:
        return self.tp, self.fp, self.fn, self.f1


def _greedy_hits(pred: Sequence[Segment], gt: Sequence[Segment], k: float) -> List[Optional[int]]:
    """Index of the ground-truth segment each prediction claims, or None."""
    matched = [False] * len(gt)
    hits: List[Optional[int]] = []
    for p in pred:
        best, best_iou = -1, -1.0
        for j, g in enumerate(gt):
            if g.label != p.label:
                continue
            v = iou(p, g)
            if v > best_iou:
                best, best_iou = j, v
        if best >= 0 and best_iou >= k and not matched[best]:
            matched[best] = True
            hits.append(best)
        else:
            hits.append(None)
    return hits


def f1_at_k(pred: Sequence[Segment], gt: Sequence[Segment], k: float) -> F1Counts:
    """Greedy temporal-order matching: each prediction tries only its best-IoU target."""
    if not 0.0 < k < 1.0:
        raise ValueError(f"threshold k must lie in (0, 1), got {k}")
    _require_canonical(pred, "predicted")
    _require_canonical(gt, "ground-truth")
    tp = sum(h is not None for h in _greedy_hits(pred, gt, k))
    return F1Counts(tp, len(pred) - tp, len(gt) - tp)


def f1_oracle(pred: Sequence[Segment], gt: Sequence[Segment], k: float) -> F1Counts:
    """Maximum one-to-one same-label matching with IoU >= k, by exhaustive search."""
    if len(pred) > ORACLE_LIMIT or len(gt) > ORACLE_LIMIT:
        raise ValueError(f"oracle instance too large: {len(pred)} x {len(gt)} (limit {ORACLE_LIMIT})")
    ok = [[p.label == g.label and iou(p, g) >= k for g in gt] for p in pred]

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> int:
        if i == len(pred):
            return 0
        score = best(i + 1, used)  # leave prediction i unmatched
        for j in range(len(gt)):
            if ok[i][j] and not used >> j & 1:
                score = max(score, 1 + best(i + 1, used | 1 << j))
        return score

    tp = best(0, 0)
    return F1Counts(tp, len(pred) - tp, len(gt) - tp)


def shares_best_target(pred: Sequence[Segment], gt: Sequence[Segment]) -> bool:
    """True if two predictions have the same best-IoU ground-truth segment."""
    targets = []
    for p in pred:
        cands = [(iou(p, g), -j) for j, g in enumerate(gt) if g.label == p.label]
        if cands:
            v, j = max(cands)
            if v > 0:
                targets.append(-j)
    return len(targets) != len(set(targets))


# -- reports ---------------------------------------------------------------------
@dataclass
class F1Report:
    """Pooled counts per threshold, per-class breakdown and per-fold F1 (percent)."""

    thresholds: Tuple[float, ...] = THRESHOLDS
    counts: Dict[float, F1Counts] = field(default_factory=dict)
    per_class: Dict[float, Dict[int, F1Counts]] = field(default_factory=dict)
    fold_f1: Dict[float, List[float]] = field(default_factory=dict)
    fold_names: List[str] = field(default_factory=list)

    def mean(self, k: float) -> float:
        return float(np.mean(self.fold_f1[k]))

    def std(self, k: float) -> float:
        return float(np.std(self.fold_f1[k]))  # population std

    def summary(self, k: float) -> str:
        return f"{self.mean(k):.1f} ± {self.std(k):.1f}"

    def column(self, k: float) -> str:
        return f"F1@{int(round(k * 100))}"

    def to_table(self, title: str = "") -> str:
        cols = [self.column(k) for k in self.thresholds]
        lines = [title] if title else []
        lines.append(" | ".join(f"{c:>13}" for c in cols))
        lines.append(" | ".join(f"{self.summary(k):>13}" for k in self.thresholds))
        return "\n".join(lines)

    def records(self) -> List[dict]:
        out = []
        for i, name in enumerate(self.fold_names):
            for k in self.thresholds:
                out.append({"fold": name, "k": k, "f1": round(self.fold_f1[k][i], 10)})
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())


def evaluate_timelines(pairs: Iterable[Tuple[Timeline, Timeline]], thresholds=THRESHOLDS,
                       fold_name: str = "fold0") -> F1Report:
    """Pool counts over every (pred, gt) timeline pair, e.g. each human of each video."""
    pairs = list(pairs)
    report = F1Report(thresholds=tuple(thresholds), fold_names=[fold_name])
    for k in report.thresholds:
        total = F1Counts()
        per_class: Dict[int, F1Counts] = {}
        for pred, gt in pairs:
            c = f1_at_k(pred, gt, k)
            total = total + c
            hits = _greedy_hits(pred, gt, k)
            claimed = {h for h in hits if h is not None}
            for p, h in zip(pred, hits):
                pc = per_class.setdefault(p.label, F1Counts())
                if h is None:
                    pc.fp += 1
                else:
                    pc.tp += 1
            for j, g in enumerate(gt):
                if j not in claimed:
                    per_class.setdefault(g.label, F1Counts()).fn += 1
        report.counts[k] = total
        report.per_class[k] = dict(sorted(per_class.items()))
        report.fold_f1[k] = [100.0 * total.f1]
    return report


def aggregate_folds(reports: Sequence[F1Report]) -> F1Report:
    if not reports:
        raise ValueError("no fold reports to aggregate")
    ks = reports[0].thresholds
    if any(r.thresholds != ks for r in reports):
        raise ValueError("fold reports use different thresholds")
    out = F1Report(thresholds=ks)
    for r in reports:
        out.fold_names.extend(r.fold_names)
    for k in ks:
        total = F1Counts()
        per_class: Dict[int, F1Counts] = {}
        for r in reports:
            total = total + r.counts.get(k, F1Counts())
            for lab, c in r.per_class.get(k, {}).items():
                per_class[lab] = per_class.get(lab, F1Counts()) + c
        out.counts[k] = total
        out.per_class[k] = dict(sorted(per_class.items()))
        out.fold_f1[k] = [v for r in reports for v in r.fold_f1[k]]
    return out
