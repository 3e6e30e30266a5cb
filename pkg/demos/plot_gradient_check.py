"""
Checking gradients against finite differences
=============================================

Every forward pass in the package runs on a small reverse-mode engine over
numpy arrays. Here we build the whole network on a two-frame toy scene and
compare its analytic gradients with central differences.
"""

import numpy as np

from cats_hoi import CatsModel, ModelConfig, SceneSequence, finite_difference_check

rng = np.random.default_rng(0)

# one person with three joints, one object, a 5-d visual vector per entity
T, J = 2, 3
seq = SceneSequence(
    video_id="toy", subject_ids=("s00",),
    joints=rng.uniform(0.2, 0.8, size=(T, 1, J, 2)),
    boxes=np.array([[[0.1, 0.1, 0.4, 0.5]], [[0.15, 0.1, 0.45, 0.5]]]),
    labels=np.array([[0, 2]]),
    visual_human=rng.normal(size=(T, 1, 5)), visual_object=rng.normal(size=(T, 1, 5)),
    width=1.0, height=1.0,
)

# soft boundaries keep the loss smooth; the Gumbel noise is frozen
cfg = ModelConfig(num_classes=3, vis_dim=5, c1=4, c2=3, d_h=3, joints=J, straight_through=False)
model = CatsModel(cfg, seed=1)
noise = rng.gumbel(size=(1, T, 2))

print(f"{'parameter':<32} {'shape':>10}  rel. error")
for name, p in model.parameters().items():
    err = finite_difference_check(lambda _: model.loss(seq, train=True, tau=0.8, noise=noise), p)
    print(f"{name:<32} {str(p.shape):>10}  {err:.1e}")
