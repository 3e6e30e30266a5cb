"""Scenery interactive graph: attention over every human-joint and object-corner node."""

from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np

from . import tensor as tn
from .fusion import glorot
from .tensor import Tensor


def full_edges(num_nodes: int) -> np.ndarray:
    return np.ones((num_nodes, num_nodes), dtype=bool)


def scene_nodes(human: Tensor, obj: Tensor) -> Tensor:
    """Stack H~ (T, HJ, C3) and O~ (T, 2O, C3) along the node axis; humans first."""
    return tn.concat([human, obj], axis=1)


class GatLayer:
    """Shared transform ``theta`` (C3 x C3) and attention vector (2*C3) per head."""

    def __init__(self, dim: int, rng: np.random.Generator, heads: int = 1):
        if heads < 1:
            raise ValueError("need at least one attention head")
        self.theta = [tn.parameter(glorot(rng, dim, dim)) for _ in range(heads)]
        self.att = [tn.parameter(glorot(rng, 2 * dim, 1)) for _ in range(heads)]
        self.dim = dim

    @property
    def heads(self) -> int:
        return len(self.theta)

    def parameters(self) -> Dict[str, Tensor]:
        out = {}
        for k, (th, a) in enumerate(zip(self.theta, self.att)):
            out[f"theta{k}"] = th
            out[f"att{k}"] = a
        return out


def _check_edges(edges: np.ndarray, n: int) -> np.ndarray:
    edges = np.asarray(edges, dtype=bool)
    if edges.shape != (n, n):
        raise tn.ShapeError(f"edge matrix {edges.shape} does not match {n} nodes")
    if not edges.any(axis=1).all():
        raise tn.DegenerateSliceError("node with an empty neighbourhood")
    return edges


def _head(nodes: Tensor, theta: Tensor, att: Tensor, edges: np.ndarray):
    d = theta.shape[1]
    proj = nodes @ theta                              # (T, N, C3)
    src = proj @ att[:d]                              # (T, N, 1)
    dst = tn.swapaxes(proj @ att[d:], -1, -2)         # (T, 1, N)
    logits = tn.leaky_relu(src + dst)                 # (T, N, N)
    alpha = tn.softmax_last_axis(logits, mask=edges)
    return alpha, tn.matmul(alpha, proj)


def gat_forward(layer: GatLayer, nodes: Tensor, edges: Optional[np.ndarray] = None) -> Tensor:
    """One attention update per frame; returns (T, N, C3)."""
    n = nodes.shape[-2]
    edges = _check_edges(full_edges(n) if edges is None else edges, n)
    agg = None
    for theta, att in zip(layer.theta, layer.att):
        _, h = _head(nodes, theta, att, edges)
        agg = h if agg is None else agg + h
    if layer.heads > 1:
        agg = agg * (1.0 / layer.heads)
    return tn.tanh(agg)


def attention_rows(layer: GatLayer, nodes: Tensor, t: int, edges: Optional[np.ndarray] = None,
                   head: int = 0) -> np.ndarray:
    """Attention matrix of frame ``t`` (1-based) as a plain (N, N) array."""
    T, n = nodes.shape[0], nodes.shape[-2]
    if not 1 <= t <= T:
        raise IndexError(f"frame {t} outside [1, {T}]")
    edges = _check_edges(full_edges(n) if edges is None else edges, n)
    frame = Tensor(nodes.data[t - 1:t])
    alpha, _ = _head(frame, Tensor(layer.theta[head].data), Tensor(layer.att[head].data), edges)
    return alpha.data[0]


class SceneryGat:
    """A stack of attention layers (one by default)."""

    def __init__(self, dim: int, rng: np.random.Generator, layers: int = 1, heads: int = 1):
        self.layers: List[GatLayer] = [GatLayer(dim, rng, heads) for _ in range(layers)]

    def parameters(self) -> Dict[str, Tensor]:
        out = {}
        for i, layer in enumerate(self.layers):
            out.update({f"layer{i}.{k}": v for k, v in layer.parameters().items()})
        return out

    def __call__(self, nodes: Tensor, edges: Optional[np.ndarray] = None) -> Tensor:
        h = nodes
        for layer in self.layers:
            h = gat_forward(layer, h, edges)
        return h
