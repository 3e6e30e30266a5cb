"""SVG and plain-text renderings of timelines and attention matrices."""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .metrics import Segment, iou

# fixed palette keyed by class id, so colours agree across figures
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1",
           "#ff9da7", "#9c755f", "#bab0ac", "#1b9e77", "#d95f02", "#7570b3")


def colour(label: int) -> str:
    return PALETTE[label % len(PALETTE)]


def _best_iou(seg: Segment, others: Sequence[Segment]) -> float:
    return max((iou(seg, o) for o in others if o.label == seg.label), default=0.0)


def flag_errors(gt: Sequence[Segment], pred: Sequence[Segment], k: float = 0.5) -> Tuple[List[int], List[int]]:
    """Indices of predicted and ground-truth segments whose best same-label IoU is below ``k``."""
    return ([i for i, s in enumerate(pred) if _best_iou(s, gt) < k],
            [i for i, s in enumerate(gt) if _best_iou(s, pred) < k])


def timeline_svg(gt: Sequence[Segment], pred: Sequence[Segment], k: float = 0.5,
                 names: Optional[Sequence[str]] = None, width: int = 800) -> str:
    last = max([s.end for s in list(gt) + list(pred)] or [1])
    px = width / last
    bad_pred, bad_gt = flag_errors(gt, pred, k)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 80}" height="90">']
    for row, (title, segs, bad) in enumerate((("GT", gt, bad_gt), ("Pred", pred, bad_pred))):
        y = 10 + row * 40
        parts.append(f'<text x="2" y="{y + 18}" font-size="12">{title}</text>')
        for i, s in enumerate(segs):
            x = 60 + (s.start - 1) * px
            w = s.length * px
            label = names[s.label] if names else str(s.label)
            parts.append(f'<rect x="{x:.2f}" y="{y}" width="{w:.2f}" height="25" fill="{colour(s.label)}">'
                         f'<title>{escape(label)} [{s.start}, {s.end}]</title></rect>')
            if i in bad:
                parts.append(f'<rect class="error" x="{x - 1:.2f}" y="{y - 2}" width="{w + 2:.2f}" height="29" '
                             'fill="none" stroke="red" stroke-dasharray="4,2" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def timeline_text(gt: Sequence[Segment], pred: Sequence[Segment], k: float = 0.5) -> str:
    bad_pred, bad_gt = flag_errors(gt, pred, k)
    lines = ["side  label  start    end  flag"]
    for title, segs, bad in (("gt", gt, bad_gt), ("pred", pred, bad_pred)):
        for i, s in enumerate(segs):
            lines.append(f"{title:<5} {s.label:>5} {s.start:>6} {s.end:>6}  {'ERROR' if i in bad else ''}".rstrip())
    return "\n".join(lines) + "\n"


def render_timeline(gt: Sequence[Segment], pred: Sequence[Segment], out, k: float = 0.5) -> Tuple[List[int], List[int]]:
    """Write ``<out>.svg`` and ``<out>.txt``; return the flagged (pred, gt) indices."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".svg").write_text(timeline_svg(gt, pred, k))
    out.with_suffix(".txt").write_text(timeline_text(gt, pred, k))
    return flag_errors(gt, pred, k)


def attention_svg(alpha: np.ndarray, cell: int = 10) -> str:
    n = alpha.shape[0]
    peak = float(alpha.max()) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{n * cell}" height="{n * cell}">']
    for i in range(n):
        for j in range(n):
            shade = int(255 * (1.0 - alpha[i, j] / peak))
            parts.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                         f'fill="rgb({shade},{shade},255)"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
