"""Convolutional token-sequence classifier (semantic teacher)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Parameter, Tensor, ops
from ..tokenizer import PAD
from .common import ParamBuilder, SeqBatch


@dataclass
class TeacherAConfig:
    vocab_size: int
    embed_dim: int = 64
    filter_widths: tuple[int, ...] = (3, 4, 5)
    filters_per_width: int = 32
    dropout_rate: float = 0.5

    def __post_init__(self):
        self.filter_widths = tuple(int(w) for w in self.filter_widths)
        if not self.filter_widths or min(self.filter_widths) < 1:
            raise ValueError("filter widths must be >= 1")
        if min(self.vocab_size, self.embed_dim, self.filters_per_width) <= 0:
            raise ValueError("teacher-A dimensions must be positive")


def init_teacher_a(cfg: TeacherAConfig, seed: int) -> dict[str, Parameter]:
    pb = ParamBuilder("teacher_a", seed)
    pb.normal("embed", (cfg.vocab_size, cfg.embed_dim), 1.0 / np.sqrt(cfg.embed_dim))
    for w in cfg.filter_widths:
        fan_in = w * cfg.embed_dim
        pb.xavier(f"conv{w}.w", fan_in, cfg.filters_per_width,
                  shape=(w, cfg.embed_dim, cfg.filters_per_width))
        pb.zeros(f"conv{w}.b", (cfg.filters_per_width,))
    feat = len(cfg.filter_widths) * cfg.filters_per_width
    pb.xavier("out.w", feat, 2)
    pb.zeros("out.b", (2,))
    return pb.params


def teacher_a_forward(cfg: TeacherAConfig, params: dict[str, Parameter], batch: SeqBatch,
                      train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    """embed -> conv per width -> tanh -> max over time -> concat -> dropout -> affine."""
    ids = batch.ids
    need = max(cfg.filter_widths)
    if ids.shape[1] < need:
        ids = np.pad(ids, ((0, 0), (0, need - ids.shape[1])), constant_values=PAD)
    p = params
    x = ops.embedding(p["teacher_a.embed"], ids)
    pooled = [ops.max_over_time(ops.tanh(ops.conv1d(x, p[f"teacher_a.conv{w}.w"],
                                                    p[f"teacher_a.conv{w}.b"])))
              for w in cfg.filter_widths]
    h = ops.concat(pooled, axis=-1)
    h = ops.dropout(h, cfg.dropout_rate, rng, train)
    return ops.linear(h, p["teacher_a.out.w"], p["teacher_a.out.b"])
