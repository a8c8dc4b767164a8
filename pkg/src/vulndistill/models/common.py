from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..graphs import TokenGraph, normalized_adjacency
from ..numerics import Parameter
from ..tokenizer import TokenSequence


class ParamBuilder:
    """Creates named parameters in a fixed order from one seeded generator."""

    def __init__(self, prefix: str, seed: int):
        self.prefix = prefix
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, Parameter] = {}

    def add(self, name: str, data: np.ndarray) -> Parameter:
        full = f"{self.prefix}.{name}"
        if full in self.params:
            raise ValueError(f"duplicate parameter name {full}")
        p = Parameter(np.asarray(data, dtype=np.float64), full)
        self.params[full] = p
        return p

    def normal(self, name: str, shape, std: float) -> Parameter:
        return self.add(name, self.rng.normal(scale=std, size=shape))

    def xavier(self, name: str, fan_in: int, fan_out: int, shape=None) -> Parameter:
        std = np.sqrt(2.0 / (fan_in + fan_out))
        return self.normal(name, shape or (fan_in, fan_out), std)

    def zeros(self, name: str, shape) -> Parameter:
        return self.add(name, np.zeros(shape))

    def ones(self, name: str, shape) -> Parameter:
        return self.add(name, np.ones(shape))


@dataclass
class SeqBatch:
    ids: np.ndarray        # [B, L] int
    attn_len: np.ndarray   # [B]
    cls_pos: np.ndarray
    dia_pos: np.ndarray
    dib_pos: np.ndarray

    @classmethod
    def from_sequences(cls, seqs: Sequence[TokenSequence]) -> SeqBatch:
        return cls(
            np.array([s.ids for s in seqs], dtype=np.int64).reshape(len(seqs), -1),
            np.array([s.attn_len for s in seqs], dtype=np.int64),
            np.array([s.cls_pos for s in seqs], dtype=np.int64),
            np.array([s.dia_pos for s in seqs], dtype=np.int64),
            np.array([s.dib_pos for s in seqs], dtype=np.int64),
        )

    def __len__(self) -> int:
        return self.ids.shape[0]


@dataclass
class GraphBatch:
    node_ids: np.ndarray   # [B, N] int, padded with 0
    mask: np.ndarray       # [B, N] bool
    adj: np.ndarray        # [B, N, N] normalized adjacency, zero outside the mask

    @classmethod
    def from_graphs(cls, graphs: Sequence[TokenGraph]) -> GraphBatch:
        n = max([g.num_nodes for g in graphs] + [1])
        b = len(graphs)
        ids = np.zeros((b, n), dtype=np.int64)
        mask = np.zeros((b, n), dtype=bool)
        adj = np.zeros((b, n, n))
        for i, g in enumerate(graphs):
            k = g.num_nodes
            ids[i, :k] = g.node_ids
            mask[i, :k] = True
            if k:
                adj[i, :k, :k] = normalized_adjacency(g.adjacency)
        return cls(ids, mask, adj)

    def __len__(self) -> int:
        return self.node_ids.shape[0]
