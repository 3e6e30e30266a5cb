"""End-to-end category-to-scenery network assembled from the component modules."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import tensor as tn
from .fusion import C1_DEFAULT, C2_DEFAULT, GCN_DEPTH_DEFAULT, CategoryFusion, SkeletonSpec
from .geometry import build_human_geometry, build_object_geometry
from .scene import SceneSequence
from .scenery import SceneryGat, scene_nodes
from .temporal import (BiGru, BoundaryModule, ClassifierHead, classify, frame_loss,
                       gumbel_boundaries, pool_scene, segment_context)
from .tensor import Tensor


@dataclass
class ModelConfig:
    num_classes: int = 13
    vis_dim: int = 2048
    c1: int = C1_DEFAULT
    c2: int = C2_DEFAULT
    gcn_depth: int = GCN_DEPTH_DEFAULT
    d_h: int = 256
    gat_layers: int = 1
    heads: int = 1
    tau: float = 1.0
    straight_through: bool = True
    independent: bool = False
    skeleton: str = ""  # "a-b, c-d" edge list; empty means the default for J
    joints: int = 15

    @property
    def c3(self) -> int:
        return self.c1 + self.c2

    def skeleton_spec(self) -> SkeletonSpec:
        if self.skeleton:
            return SkeletonSpec.parse(self.joints, self.skeleton)
        return SkeletonSpec.default(self.joints)


class CatsModel:
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        self.fusion = CategoryFusion(c.vis_dim, rng, c1=c.c1, c2=c.c2, depth=c.gcn_depth,
                                     skeleton=c.skeleton_spec(), independent=c.independent)
        self.gat = SceneryGat(c.c3, rng, layers=c.gat_layers, heads=c.heads)
        self.frame_gru = BiGru(2 * c.c3, c.d_h, rng)
        self.boundary = BoundaryModule(2 * c.d_h, rng, tau=c.tau, straight_through=c.straight_through)
        self.segment_gru = BiGru(2 * c.d_h + 2, c.d_h, rng)
        self.head = ClassifierHead(4 * c.d_h, c.num_classes, rng)

    def parameters(self) -> Dict[str, Tensor]:
        out = {}
        for prefix, mod in (("fusion", self.fusion), ("gat", self.gat), ("frame_gru", self.frame_gru),
                            ("boundary", self.boundary), ("segment_gru", self.segment_gru),
                            ("head", self.head)):
            out.update({f"{prefix}.{k}": v for k, v in mod.parameters().items()})
        return out

    def nodes(self, seq: SceneSequence) -> Tensor:
        """Fused scenery nodes (T, HJ+2O, C3) before attention."""
        human, obj = self.fusion(seq, build_human_geometry(seq), build_object_geometry(seq))
        return scene_nodes(human, obj)

    def forward(self, seq: SceneSequence, train: bool = False, rng: Optional[np.random.Generator] = None,
                tau: Optional[float] = None, noise: Optional[np.ndarray] = None) -> Dict[str, Tensor]:
        H = seq.H
        v = self.nodes(seq)
        g = self.gat(v)
        human, glob = pool_scene(g, H, seq.J)                      # (T,H,C3), (T,C3)
        glob_h = tn.matmul(Tensor(np.ones((H, 1))), tn.reshape(glob, (glob.shape[0], 1, glob.shape[1])))
        x = tn.swapaxes(tn.concat([human, glob_h], axis=-1), 0, 1)  # (H,T,2C3)
        states = self.frame_gru(x)                                  # (H,T,2Dh)
        ind = gumbel_boundaries(self.boundary, states, rng=rng, train_mode=train, tau=tau, noise=noise)
        ctx = [tn.reshape(segment_context(self.segment_gru, states[h], ind[h]), (1, seq.T, -1))
               for h in range(H)]
        ctx = tn.concat(ctx, axis=0)                                # (H,T,2Dh)
        logits = tn.swapaxes(classify(self.head, states, ctx), 0, 1)  # (T,H,C)
        return {"nodes": v, "scene": g, "states": states, "boundaries": ind, "logits": logits}

    def loss(self, seq: SceneSequence, **kwargs) -> Tensor:
        out = self.forward(seq, **kwargs)
        return frame_loss(out["logits"], seq.labels)

    def predict(self, seq: SceneSequence) -> np.ndarray:
        """Frame labels (H, T) from the noiseless forward pass."""
        return self.forward(seq, train=False)["logits"].data.argmax(axis=-1).T

    # -- checkpoints -----------------------------------------------------------
    def save(self, path) -> None:
        path = Path(path)
        arrays = {k: v.data for k, v in self.parameters().items()}
        arrays["__config__"] = np.frombuffer(json.dumps(asdict(self.config), sort_keys=True).encode(), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path, expect: Optional[ModelConfig] = None) -> "CatsModel":
        with np.load(path) as z:
            config = ModelConfig(**json.loads(bytes(z["__config__"]).decode()))
            if expect is not None and asdict(expect) != asdict(config):
                raise ValueError(f"checkpoint architecture {asdict(config)} does not match {asdict(expect)}")
            model = cls(config)
            params = model.parameters()
            missing = set(params) - set(z.files)
            if missing:
                raise ValueError(f"checkpoint missing parameters: {sorted(missing)}")
            for k, p in params.items():
                if z[k].shape != p.shape:
                    raise ValueError(f"checkpoint parameter {k} has shape {z[k].shape}, expected {p.shape}")
                p.data = z[k].copy()
        return model
