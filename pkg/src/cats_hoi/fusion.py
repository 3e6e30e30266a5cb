"""Category-level fusion: per-category GCN on geometry, MLP on visual vectors, concat."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import tensor as tn
from .scene import SceneSequence
from .tensor import Tensor

C1_DEFAULT = 512
C2_DEFAULT = 256
GCN_DEPTH_DEFAULT = 4

# head, neck, torso, then left arm, right arm, left leg, right leg
DEFAULT_SKELETON_15 = (
    (0, 1), (1, 2),
    (1, 3), (3, 4), (4, 5),
    (1, 6), (6, 7), (7, 8),
    (2, 9), (9, 10), (10, 11),
    (2, 12), (12, 13), (13, 14),
)


@dataclass(frozen=True)
class SkeletonSpec:
    num_joints: int
    edges: Tuple[Tuple[int, int], ...]

    @classmethod
    def default(cls, num_joints: int = 15) -> "SkeletonSpec":
        if num_joints == 15:
            return cls(15, DEFAULT_SKELETON_15)
        return cls(num_joints, tuple((i, i + 1) for i in range(num_joints - 1)))

    @classmethod
    def parse(cls, num_joints: int, text: str) -> "SkeletonSpec":
        """Parse ``"0-1, 1-2, ..."`` as written in a run config."""
        edges = []
        for tok in text.replace(";", ",").split(","):
            tok = tok.strip()
            if not tok:
                continue
            a, b = tok.split("-")
            edges.append((int(a), int(b)))
        return cls(num_joints, tuple(edges))

    def format(self) -> str:
        return ", ".join(f"{a}-{b}" for a, b in self.edges)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def _row_normalize(adj: np.ndarray) -> np.ndarray:
    return adj / adj.sum(axis=1, keepdims=True)


def build_adjacency(category: str, topology, num_entities: int = 1, identity: bool = False) -> np.ndarray:
    """Row-normalised adjacency with self-loops for one category.

    ``topology`` is a :class:`SkeletonSpec` for humans (block-diagonal over
    ``num_entities`` persons) or the object count for objects (a 2-node clique
    per box).  ``identity=True`` drops every intra-entity edge.
    """
    if category == "human":
        skel: SkeletonSpec = topology
        J = skel.num_joints
        block = np.eye(J)
        for a, b in skel.edges:
            if not (0 <= a < J and 0 <= b < J):
                raise ValueError(f"skeleton edge ({a}, {b}) out of range for {J} joints")
            if not identity:
                block[a, b] = block[b, a] = 1.0
        adj = np.kron(np.eye(num_entities), block)
    elif category == "object":
        O = int(topology)
        block = np.eye(2) if identity else np.ones((2, 2))
        adj = np.kron(np.eye(O), block)
    else:
        raise ValueError(f"unknown category {category!r}")
    return _row_normalize(adj)


class GcnStack:
    """``n`` layers of ``tanh(A H W)`` with widths 4 -> C2 -> ... -> C2."""

    def __init__(self, depth: int, out_dim: int, rng: np.random.Generator, in_dim: int = 4):
        if depth < 1:
            raise ValueError("GCN depth must be >= 1")
        dims = [in_dim] + [out_dim] * depth
        self.weights = [tn.parameter(glorot(rng, dims[i], dims[i + 1])) for i in range(depth)]

    @property
    def depth(self) -> int:
        return len(self.weights)

    def parameters(self) -> Dict[str, Tensor]:
        return {f"W{i}": w for i, w in enumerate(self.weights)}


def gcn_forward(stack: GcnStack, adjacency: np.ndarray, x: Tensor) -> Tensor:
    """Apply the stack frame-wise; ``x`` is (T, N, 4), output (T, N, C2)."""
    N = adjacency.shape[0]
    if adjacency.shape != (N, N) or x.shape[-2] != N:
        raise tn.ShapeError(f"adjacency {adjacency.shape} does not fit node features {x.shape}")
    A = Tensor(adjacency)
    h = x
    for w in stack.weights:
        h = tn.tanh(tn.matmul(A, h) @ w)
    return h


class VisualEmbedder:
    """D_vis -> hidden (tanh) -> C1."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, hidden: Optional[int] = None):
        hidden = hidden or out_dim
        self.w1 = tn.parameter(glorot(rng, in_dim, hidden))
        self.b1 = tn.parameter(np.zeros(hidden))
        self.w2 = tn.parameter(glorot(rng, hidden, out_dim))
        self.b2 = tn.parameter(np.zeros(out_dim))

    def parameters(self) -> Dict[str, Tensor]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def __call__(self, v: Tensor) -> Tensor:
        return tn.tanh(v @ self.w1 + self.b1) @ self.w2 + self.b2


def replication_matrix(num_entities: int, rows_per_entity: int) -> np.ndarray:
    """(E*R, E) 0/1 matrix copying each entity vector onto its R node rows."""
    return np.kron(np.eye(num_entities), np.ones((rows_per_entity, 1)))


def embed_entities(emb: VisualEmbedder, visual: np.ndarray, rows_per_entity: int) -> Tensor:
    T, E, _ = visual.shape
    per_entity = emb(Tensor(visual))  # (T, E, C1)
    return tn.matmul(Tensor(replication_matrix(E, rows_per_entity)), per_entity)


def embed_visual(emb: VisualEmbedder, seq: SceneSequence) -> Tuple[Tensor, Tensor]:
    """Return (HV', OV') with shapes (T, H*J, C1) and (T, 2*O, C1)."""
    if seq.visual_human is None or seq.visual_object is None:
        raise ValueError(f"{seq.video_id}: visual features missing")
    return (embed_entities(emb, seq.visual_human, seq.J),
            embed_entities(emb, seq.visual_object, 2))


def fuse(geo: Tensor, vis: Tensor) -> Tensor:
    """Geometric channels first, then visual: (T, N, C2) + (T, N, C1) -> (T, N, C1+C2)."""
    if geo.shape[:-1] != vis.shape[:-1]:
        raise tn.ShapeError(f"fuse leading-shape mismatch: {geo.shape} vs {vis.shape}")
    return tn.concat_last_axis(geo, vis)


class CategoryFusion:
    """Both category branches with their adjacencies; produces (H~, O~)."""

    def __init__(self, vis_dim: int, rng: np.random.Generator, c1: int = C1_DEFAULT, c2: int = C2_DEFAULT,
                 depth: int = GCN_DEPTH_DEFAULT, skeleton: Optional[SkeletonSpec] = None,
                 independent: bool = False):
        self.c1, self.c2 = c1, c2
        self.skeleton = skeleton
        self.independent = independent
        self.human_gcn = GcnStack(depth, c2, rng)
        self.object_gcn = GcnStack(depth, c2, rng)
        self.human_visual = VisualEmbedder(vis_dim, c1, rng)
        self.object_visual = VisualEmbedder(vis_dim, c1, rng)
        self._adj_cache: Dict[tuple, np.ndarray] = {}

    @property
    def c3(self) -> int:
        return self.c1 + self.c2

    def parameters(self) -> Dict[str, Tensor]:
        out = {}
        for prefix, mod in (("human_gcn", self.human_gcn), ("object_gcn", self.object_gcn),
                            ("human_visual", self.human_visual), ("object_visual", self.object_visual)):
            out.update({f"{prefix}.{k}": v for k, v in mod.parameters().items()})
        return out

    def adjacency(self, category: str, seq: SceneSequence) -> np.ndarray:
        """Inspection hook for the adjacency actually used on ``seq``."""
        key = (category, seq.H, seq.J, seq.O)
        if key not in self._adj_cache:
            if category == "human":
                skel = self.skeleton if self.skeleton is not None and self.skeleton.num_joints == seq.J \
                    else SkeletonSpec.default(seq.J)
                adj = build_adjacency("human", skel, seq.H, identity=self.independent)
            else:
                adj = build_adjacency("object", seq.O, identity=self.independent)
            self._adj_cache[key] = adj
        return self._adj_cache[key]

    def __call__(self, seq: SceneSequence, human_geo: np.ndarray, object_geo: np.ndarray) -> Tuple[Tensor, Tensor]:
        hg = gcn_forward(self.human_gcn, self.adjacency("human", seq), Tensor(human_geo))
        og = gcn_forward(self.object_gcn, self.adjacency("object", seq), Tensor(object_geo))
        hv = embed_entities(self.human_visual, seq.visual_human, seq.J)
        ov = embed_entities(self.object_visual, seq.visual_object, 2)
        return fuse(hg, hv), fuse(og, ov)
