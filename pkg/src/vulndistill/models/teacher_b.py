"""Graph classifier over token co-occurrence graphs (syntactic teacher).

Each layer computes ``relu(A_hat @ H @ W + H)`` with ``A_hat`` the
symmetrically degree-normalized adjacency; the readout concatenates the mean
and max over nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphs import DEFAULT_WINDOW
from ..numerics import Parameter, Tensor, ops
from .common import GraphBatch, ParamBuilder


@dataclass
class TeacherBConfig:
    vocab_size: int
    embed_dim: int = 64
    gnn_layers: int = 2
    hidden_dim: int = 64
    readout: str = "mean+max"
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.gnn_layers < 1:
            raise ValueError("teacher-B needs at least one graph layer")
        if self.readout != "mean+max":
            raise ValueError(f"unsupported readout {self.readout!r}")
        if min(self.vocab_size, self.embed_dim, self.hidden_dim) <= 0:
            raise ValueError("teacher-B dimensions must be positive")


def init_teacher_b(cfg: TeacherBConfig, seed: int) -> dict[str, Parameter]:
    pb = ParamBuilder("teacher_b", seed)
    pb.normal("embed", (cfg.vocab_size, cfg.embed_dim), 1.0 / np.sqrt(cfg.embed_dim))
    if cfg.embed_dim != cfg.hidden_dim:
        pb.xavier("in_proj", cfg.embed_dim, cfg.hidden_dim)
    for i in range(cfg.gnn_layers):
        pb.xavier(f"gnn{i}.w", cfg.hidden_dim, cfg.hidden_dim)
    pb.xavier("out.w", 2 * cfg.hidden_dim, 2)
    pb.zeros("out.b", (2,))
    return pb.params


def teacher_b_forward(cfg: TeacherBConfig, params: dict[str, Parameter], batch: GraphBatch,
                      train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    p = params
    mask = batch.mask[:, :, None].astype(float)
    h = ops.embedding(p["teacher_b.embed"], batch.node_ids)
    if "teacher_b.in_proj" in p:
        h = ops.matmul(h, p["teacher_b.in_proj"])
    h = ops.mul(h, mask)
    adj = Tensor(batch.adj)
    for i in range(cfg.gnn_layers):
        msg = ops.matmul(ops.matmul(adj, h), p[f"teacher_b.gnn{i}.w"])
        h = ops.mul(ops.relu(ops.add(msg, h)), mask)
    pooled = ops.concat([ops.masked_mean(h, batch.mask), ops.masked_max(h, batch.mask)], axis=-1)
    return ops.linear(pooled, p["teacher_b.out.w"], p["teacher_b.out.b"])
