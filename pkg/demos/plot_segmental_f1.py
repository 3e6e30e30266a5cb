"""
Segmental F1 and its exhaustive oracle
======================================

A predicted segment counts as a hit when it overlaps an unclaimed ground-truth
segment of the same label by at least k IoU. The standard procedure is greedy
in temporal order; an exhaustive matcher shows where that is conservative.
"""

from cats_hoi import Segment, f1_at_k, f1_oracle, iou
from cats_hoi.render import render_timeline

A, B = 0, 1
gt = [Segment(A, 1, 50), Segment(B, 51, 100)]
pred = [Segment(A, 1, 60), Segment(B, 61, 100)]

for p, g in zip(pred, gt):
    print(f"IoU {p} vs {g}: {iou(p, g):.3f}")
for k in (0.10, 0.25, 0.50, 0.90):
    print(f"k={k:.2f}  greedy {f1_at_k(pred, gt, k).as_tuple()}  oracle {f1_oracle(pred, gt, k).as_tuple()}")

# two predictions whose best target is the same ground-truth segment
gt2 = [Segment(A, 1, 10), Segment(B, 11, 12), Segment(A, 13, 30)]
pred2 = [Segment(A, 6, 20), Segment(A, 22, 30)]
print("greedy tp:", f1_at_k(pred2, gt2, 0.25).tp, " oracle tp:", f1_oracle(pred2, gt2, 0.25).tp)

# red dashed outlines mark segments whose best same-label IoU is under k
flagged = render_timeline(gt, pred, "timeline_k90", k=0.9)
print("flagged (pred, gt) indices at k=0.9:", flagged)
