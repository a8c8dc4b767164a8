"""Transformer-encoder student with class and two distillation heads.

Layers use post-norm ordering:
    M = LN(MHA(H) + H)
    H' = LN(FFN(M) + M)
Pad positions (index >= attn_len) are masked out as attention keys.
Each layer's scores use queries pre-scaled by 1/sqrt(d_head).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Parameter, Tensor, ops
from .common import ParamBuilder, SeqBatch

HEADS = ("cls", "dia", "dib")


@dataclass
class StudentConfig:
    vocab_size: int
    embed_dim: int = 64
    layers: int = 4
    heads: int = 4
    ffn_dim: int = 128
    seq_len: int = 512
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if self.seq_len < 5:
            raise ValueError("seq_len must be >= 5")


def init_student(cfg: StudentConfig, seed: int) -> dict[str, Parameter]:
    d, f = cfg.embed_dim, cfg.ffn_dim
    pb = ParamBuilder("student", seed)
    pb.normal("embed", (cfg.vocab_size, d), 0.1)
    pb.normal("pos", (cfg.seq_len, d), 0.1)
    for z in range(cfg.layers):
        pre = f"layer{z}"
        for name in ("wq", "wk", "wv", "wo"):
            pb.xavier(f"{pre}.attn.{name}", d, d)
            # a key bias shifts each score row by a constant, which softmax ignores
            if name != "wk":
                pb.zeros(f"{pre}.attn.b{name[1]}", (d,))
        pb.ones(f"{pre}.ln1.g", (d,))
        pb.zeros(f"{pre}.ln1.b", (d,))
        pb.xavier(f"{pre}.ffn.w1", d, f)
        pb.zeros(f"{pre}.ffn.b1", (f,))
        pb.xavier(f"{pre}.ffn.w2", f, d)
        pb.zeros(f"{pre}.ffn.b2", (d,))
        pb.ones(f"{pre}.ln2.g", (d,))
        pb.zeros(f"{pre}.ln2.b", (d,))
    for head in HEADS:
        pb.xavier(f"head.{head}.w", d, 2)
        pb.zeros(f"head.{head}.b", (2,))
    return pb.params


def _split_heads(x: Tensor, bsz: int, length: int, heads: int) -> Tensor:
    return ops.transpose(ops.reshape(x, (bsz, length, heads, -1)), (0, 2, 1, 3))


def multi_head_attention(cfg: StudentConfig, p: dict[str, Parameter], pre: str, h: Tensor,
                         key_mask: np.ndarray, trace: dict | None = None) -> Tensor:
    bsz, length, d = h.shape
    nh = cfg.heads
    q = _split_heads(ops.linear(h, p[f"{pre}.attn.wq"], p[f"{pre}.attn.bq"]), bsz, length, nh)
    q = ops.mul(q, 1.0 / np.sqrt(d // nh))
    k = _split_heads(ops.matmul(h, p[f"{pre}.attn.wk"]), bsz, length, nh)
    v = _split_heads(ops.linear(h, p[f"{pre}.attn.wv"], p[f"{pre}.attn.bv"]), bsz, length, nh)
    scores = ops.matmul(q, ops.transpose(k, (0, 1, 3, 2)))
    attn = ops.masked_softmax(scores, key_mask[:, None, None, :])
    if trace is not None:
        trace.setdefault("attention", []).append(attn.data)
    ctx = ops.reshape(ops.transpose(ops.matmul(attn, v), (0, 2, 1, 3)), (bsz, length, d))
    return ops.linear(ctx, p[f"{pre}.attn.wo"], p[f"{pre}.attn.bo"])


def student_forward(cfg: StudentConfig, params: dict[str, Parameter], batch: SeqBatch,
                    train: bool = False, rng: np.random.Generator | None = None,
                    trace: dict | None = None) -> tuple[Tensor, Tensor, Tensor]:
    """Return (cls, dia, dib) logits, each [B, 2]."""
    p = params
    if batch.ids.shape[1] > cfg.seq_len:
        raise IndexError(f"sequence length {batch.ids.shape[1]} exceeds configured {cfg.seq_len}")
    # positions past the longest attended prefix are masked keys and never read by
    # a head, so dropping them leaves every output unchanged
    length = max(int(batch.attn_len.max(initial=1)), 1)
    ids = batch.ids[:, :length]
    bsz = ids.shape[0]
    for pos in (batch.cls_pos, batch.dia_pos, batch.dib_pos):
        if pos.size and (pos.min() < 0 or pos.max() >= length):
            raise IndexError(f"head position outside sequence length {length}")
    key_mask = np.arange(length)[None, :] < batch.attn_len[:, None]
    rate = cfg.dropout_rate

    h = ops.add(ops.embedding(p["student.embed"], ids), _pos_slice(p["student.pos"], length))
    h = ops.dropout(h, rate, rng, train)
    for z in range(cfg.layers):
        pre = f"student.layer{z}"
        att = ops.dropout(multi_head_attention(cfg, p, pre, h, key_mask, trace), rate, rng, train)
        m = ops.layer_norm(ops.add(att, h), p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        ff = ops.linear(ops.relu(ops.linear(m, p[f"{pre}.ffn.w1"], p[f"{pre}.ffn.b1"])),
                        p[f"{pre}.ffn.w2"], p[f"{pre}.ffn.b2"])
        ff = ops.dropout(ff, rate, rng, train)
        h = ops.layer_norm(ops.add(ff, m), p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
    outs = []
    for head, pos in zip(HEADS, (batch.cls_pos, batch.dia_pos, batch.dib_pos)):
        rep = ops.take_positions(h, pos)
        outs.append(ops.linear(rep, p[f"student.head.{head}.w"], p[f"student.head.{head}.b"]))
    return tuple(outs)


def _pos_slice(pos: Parameter, length: int) -> Tensor:
    if length == pos.shape[0]:
        return pos
    idx = np.arange(length)
    return ops.embedding(pos, idx)
