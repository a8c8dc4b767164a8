"""Turn a labelled dataset into model inputs.

Code text is lexer-normalized and BPE-encoded with the code vocabulary
(shared by teacher A and the student). Structure sequences are serialized,
encoded with their own vocabulary and turned into token graphs for teacher B.
Both vocabularies are trained on the train split only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data import SPLITS, CodeSample, DataError, Dataset
from ..frontend import normalize, parse_source, serialize, structure_sequence_of
from ..graphs import DEFAULT_WINDOW, TokenGraph, build_token_graph
from ..tokenizer import TokenSequence, Vocab, assemble, train_bpe

STRUCTURE_MODES = ("ast", "dfg")


def code_text(code: str) -> str:
    return normalize(code)


def structure_text(code: str, mode: str) -> str:
    return serialize(structure_sequence_of(code, mode, ast=parse_source(code)))


@dataclass
class SplitFeatures:
    ids: list[str]
    labels: np.ndarray
    seqs: list[TokenSequence]
    graphs: list[TokenGraph]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class Prepared:
    name: str
    code_vocab: Vocab
    struct_vocab: Vocab
    seq_len: int
    structure_mode: str
    window: int
    splits: dict[str, SplitFeatures]

    def split(self, name: str) -> SplitFeatures:
        if name not in self.splits:
            raise DataError(f"unknown split {name!r}; valid splits: {', '.join(self.splits)}")
        return self.splits[name]


def featurize(samples: Sequence[CodeSample], code_vocab: Vocab, struct_vocab: Vocab,
              seq_len: int, mode: str, window: int = DEFAULT_WINDOW) -> SplitFeatures:
    seqs, graphs = [], []
    for s in samples:
        seqs.append(assemble(code_vocab.encode(code_text(s.code)), seq_len))
        graphs.append(build_token_graph(struct_vocab.encode(structure_text(s.code, mode)), window))
    return SplitFeatures([s.id for s in samples], np.array([s.label for s in samples], dtype=np.int64),
                         seqs, graphs)


def prepare(ds: Dataset, vocab_size: int = 4096, seq_len: int = 512, structure_mode: str = "ast",
            window: int = DEFAULT_WINDOW, struct_vocab_size: int | None = None) -> Prepared:
    if structure_mode not in STRUCTURE_MODES:
        raise ValueError(f"unknown structure mode {structure_mode!r}")
    if not ds.train:
        raise DataError("train split is empty")
    code_vocab = train_bpe([code_text(s.code) for s in ds.train], vocab_size)
    struct_vocab = train_bpe([structure_text(s.code, structure_mode) for s in ds.train],
                             struct_vocab_size or vocab_size)
    splits = {name: featurize(ds.split(name), code_vocab, struct_vocab, seq_len, structure_mode, window)
              for name in SPLITS}
    return Prepared(ds.name, code_vocab, struct_vocab, seq_len, structure_mode, window, splits)
