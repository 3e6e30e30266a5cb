"""Temporal head: Bi-GRU, Gumbel-Softmax boundaries, segment Bi-GRU, classifier."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from . import tensor as tn
from .fusion import glorot
from .metrics import Timeline, timeline_from_labels
from .tensor import Tensor

BOUNDARY, INSIDE = 0, 1


class GruCell:
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.w_x = tn.parameter(glorot(rng, in_dim, 3 * hidden))
        self.w_h = tn.parameter(np.concatenate(
            [np.linalg.qr(rng.normal(size=(hidden, hidden)))[0] for _ in range(3)], axis=1))
        self.b_x = tn.parameter(np.zeros(3 * hidden))
        self.b_h = tn.parameter(np.zeros(3 * hidden))

    def parameters(self) -> Dict[str, Tensor]:
        return {"w_x": self.w_x, "w_h": self.w_h, "b_x": self.b_x, "b_h": self.b_h}

    def run(self, x: Tensor, reverse: bool = False) -> Tensor:
        return tn.gru_sequence(x, self.w_x, self.w_h, self.b_x, self.b_h, reverse=reverse)


class BiGru:
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.fwd = GruCell(in_dim, hidden, rng)
        self.bwd = GruCell(in_dim, hidden, rng)

    def parameters(self) -> Dict[str, Tensor]:
        out = {f"fwd.{k}": v for k, v in self.fwd.parameters().items()}
        out.update({f"bwd.{k}": v for k, v in self.bwd.parameters().items()})
        return out

    def __call__(self, x: Tensor) -> Tensor:
        return bigru_forward(self.fwd, self.bwd, x)


def bigru_forward(cell_fwd: GruCell, cell_bwd: GruCell, x: Tensor) -> Tensor:
    """``x`` is (T, D) or (B, T, D); output has last extent 2*Dh, forward half first."""
    squeeze = x.ndim == 2
    if squeeze:
        x = tn.reshape(x, (1,) + x.shape)
    if x.shape[1] < 1:
        raise tn.ShapeError("bigru_forward needs at least one frame")
    out = tn.concat([cell_fwd.run(x), cell_bwd.run(x, reverse=True)], axis=-1)
    return tn.reshape(out, out.shape[1:]) if squeeze else out


def pooling_matrix(num_humans: int, joints: int, num_nodes: int) -> np.ndarray:
    """(H, N) averaging matrix over each human's joint rows."""
    P = np.zeros((num_humans, num_nodes))
    for h in range(num_humans):
        P[h, h * joints:(h + 1) * joints] = 1.0 / joints
    return P


def pool_scene(nodes: Tensor, num_humans: int, joints: int) -> Tuple[Tensor, Tensor]:
    """Per-human mean over joint nodes (T, H, C3) and global node mean (T, C3)."""
    P = pooling_matrix(num_humans, joints, nodes.shape[-2])
    return tn.matmul(Tensor(P), nodes), tn.mean(nodes, axis=-2)


class BoundaryModule:
    def __init__(self, in_dim: int, rng: np.random.Generator, tau: float = 1.0, straight_through: bool = True):
        self.w = tn.parameter(glorot(rng, in_dim, 2))
        self.b = tn.parameter(np.zeros(2))
        self.tau = tau
        self.straight_through = straight_through

    def parameters(self) -> Dict[str, Tensor]:
        return {"w": self.w, "b": self.b}

    def logits(self, states: Tensor) -> Tensor:
        return states @ self.w + self.b


def sample_gumbel(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.uniform(np.finfo(float).tiny, 1.0, size=shape)
    return -np.log(-np.log(u))


def gumbel_boundaries(b: BoundaryModule, states: Tensor, rng: Optional[np.random.Generator] = None,
                      train_mode: bool = True, tau: Optional[float] = None,
                      noise: Optional[np.ndarray] = None) -> Tensor:
    """Per-frame (boundary, inside) indicators of shape (..., T, 2).

    Train mode perturbs the logits with Gumbel noise (``noise`` overrides the
    draw from ``rng``) and divides by ``tau``; eval mode uses no noise.  With
    ``b.straight_through`` the forward value is one-hot and the gradient is the
    soft sample's.  Frame 1 is always a boundary.
    """
    tau = b.tau if tau is None else tau
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    logits = b.logits(states)
    if train_mode:
        if noise is None:
            if rng is None:
                raise ValueError("train mode needs an rng or explicit noise")
            noise = sample_gumbel(rng, logits.shape)
        logits = logits + Tensor(noise)
    y = tn.softmax_last_axis(logits * (1.0 / tau))
    if b.straight_through or not train_mode:
        y = tn.straight_through(y)
    first = np.zeros(y.shape[:-2] + (1, 2))
    first[..., BOUNDARY] = 1.0
    T = y.shape[-2]
    rest = tn.index(y, (Ellipsis, slice(1, T), slice(None)))
    return tn.concat([Tensor(first), rest], axis=-2)


def segment_ids(indicators: np.ndarray) -> np.ndarray:
    """Segment index per frame from (T, 2) indicator values (argmax column 0 = boundary)."""
    starts = indicators.argmax(axis=-1) == BOUNDARY
    starts[0] = True
    return np.cumsum(starts) - 1


def segment_matrices(ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(S, T) mean-pooling matrix and (T, S) broadcast-back matrix."""
    S = int(ids[-1]) + 1
    assign = np.zeros((len(ids), S))
    assign[np.arange(len(ids)), ids] = 1.0
    return (assign / assign.sum(axis=0)).T, assign


def segment_context(bigru: BiGru, states: Tensor, indicators: Tensor) -> Tensor:
    """Mean-pool [states | indicators] per segment, run ``bigru`` over segments, broadcast back.

    ``states`` (T, D) and ``indicators`` (T, 2) for one sequence; returns (T, 2*Dh).
    """
    pool, back = segment_matrices(segment_ids(indicators.data))
    seg_in = tn.matmul(Tensor(pool), tn.concat([states, indicators], axis=-1))
    return tn.matmul(Tensor(back), bigru(seg_in))


class ClassifierHead:
    def __init__(self, in_dim: int, num_classes: int, rng: np.random.Generator):
        self.w = tn.parameter(glorot(rng, in_dim, num_classes))
        self.b = tn.parameter(np.zeros(num_classes))

    def parameters(self) -> Dict[str, Tensor]:
        return {"w": self.w, "b": self.b}


def classify(head: ClassifierHead, human_summaries: Tensor, segment_ctx: Tensor) -> Tensor:
    """Per-(frame, human) logits from the concatenated summary and segment context."""
    return tn.concat([human_summaries, segment_ctx], axis=-1) @ head.w + head.b


def frame_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean frame-wise cross-entropy; ``logits`` (T, H, C), ``labels`` (H, T)."""
    return tn.cross_entropy(logits, np.asarray(labels).T)


def decode_timeline(logits, background: Optional[int] = None) -> List[Timeline]:
    """Argmax per frame (ties to the lower class) then run-length encode, per human."""
    arr = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    pred = arr.argmax(axis=-1)  # (T, H)
    return [timeline_from_labels(pred[:, h], background) for h in range(pred.shape[1])]
