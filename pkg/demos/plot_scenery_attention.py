"""
Attention over the scenery graph
================================

All joints and object corners of a frame form one fully connected graph. A
single attention layer decides how much each node listens to the others.
This script draws the coefficients of one frame as a heat map.
"""

from pathlib import Path

import numpy as np

from cats_hoi import CatsModel, ModelConfig, synthesize
from cats_hoi.data import ScenarioSpec
from cats_hoi.render import attention_svg
from cats_hoi.scenery import attention_rows

# a single short synthetic video: two people, two objects
spec = ScenarioSpec(num_subjects=2, videos_per_group=1, objects=(2, 2), frames=(60, 60), durations=(12, 16))
seq = synthesize(spec)[0]

model = CatsModel(ModelConfig(num_classes=spec.num_classes, vis_dim=spec.visual_dim, c1=32, c2=16, d_h=16))
nodes = model.nodes(seq)
print("scenery nodes per frame:", nodes.shape[1], "=", seq.H, "x", seq.J, "joints +", 2 * seq.O, "corners")

alpha = attention_rows(model.gat.layers[0], nodes, t=1)
print("row sums lie within", np.abs(alpha.sum(axis=1) - 1).max(), "of one")

# untrained weights give nearly flat rows; the human and object blocks still differ
hj = seq.H * seq.J
print("mean weight on object corners, from joints: %.4f" % alpha[:hj, hj:].mean())
print("mean weight on joints, from object corners: %.4f" % alpha[hj:, :hj].mean())

out = Path("attention_frame1.svg")
out.write_text(attention_svg(alpha))
print("wrote", out)
