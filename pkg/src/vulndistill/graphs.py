"""Token co-occurrence graphs for the structure classifier."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_WINDOW = 5


@dataclass
class TokenGraph:
    node_ids: list[int]
    adjacency: np.ndarray  # symmetric 0/1 with unit diagonal

    @property
    def feature_init(self) -> list[int]:
        return self.node_ids

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def edges(self) -> set[tuple[int, int]]:
        """Undirected edges as (smaller id, larger id), self-loops excluded."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return {tuple(sorted((self.node_ids[r], self.node_ids[c]))) for r, c in zip(rows, cols)}


def build_token_graph(ids: Sequence[int], window: int = DEFAULT_WINDOW) -> TokenGraph:
    """One node per distinct id (first-occurrence order); an edge joins two ids
    that appear together inside any sliding window of ``window`` positions."""
    if window < 2:
        raise ValueError(f"window must be at least 2, got {window}")
    ids = list(ids)
    index: dict[int, int] = {}
    for t in ids:
        index.setdefault(t, len(index))
    n = len(index)
    adj = np.eye(n, dtype=np.int8)
    if n:
        pos = np.array([index[t] for t in ids])
        for off in range(1, window):
            a, b = pos[:-off], pos[off:]
            adj[a, b] = 1
            adj[b, a] = 1
        np.fill_diagonal(adj, 1)
    return TokenGraph(list(index), adj)


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """D^-1/2 A D^-1/2 with D the row sums of ``adj``."""
    a = adj.astype(float)
    deg = a.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
    return a * inv[:, None] * inv[None, :]


def write_edge_list(graph: TokenGraph, path: str | Path) -> None:
    """Debug dump: one "u v" line per undirected edge (vocabulary ids)."""
    lines = [f"{u} {v}" for u, v in sorted(graph.edges())]
    Path(path).write_text("".join(line + "\n" for line in lines))
