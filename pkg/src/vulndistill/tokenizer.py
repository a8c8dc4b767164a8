"""Byte-pair-encoding vocabularies and fixed-length input assembly.

Words are whitespace-separated; every word after the first on a line keeps
one leading space as its first symbol, so ``decode(encode(s))`` returns
``s`` with whitespace runs collapsed to single spaces. Merges never cross
word boundaries.
"""
from __future__ import annotations

import hashlib
import heapq
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

PAD, CLS, SEP, DIA, DIB, UNK = 0, 1, 2, 3, 4, 5
SPECIALS = {"[pad]": PAD, "[cls]": CLS, "[sep]": SEP, "[dia]": DIA, "[dib]": DIB, "[unk]": UNK}
VOCAB_FORMAT_VERSION = 1


def split_words(text: str) -> list[str]:
    parts = text.split()
    return [w if i == 0 else " " + w for i, w in enumerate(parts)]


@dataclass
class Vocab:
    alphabet: list[str]
    merges: list[tuple[str, str]]
    id_of: dict[str, int] = field(default_factory=dict)
    _cache: dict[str, list[int]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.id_of:
            self.id_of = _build_ids(self.alphabet, self.merges)
        self.token_of = {i: s for s, i in self.id_of.items()}
        self.rank = {pair: r for r, pair in enumerate(self.merges)}

    def __len__(self) -> int:
        return len(self.id_of)

    @property
    def specials(self) -> dict[str, int]:
        return dict(SPECIALS)

    def to_json(self) -> dict:
        return {"version": VOCAB_FORMAT_VERSION, "specials": dict(SPECIALS),
                "alphabet": list(self.alphabet), "merges": [list(m) for m in self.merges]}

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n",
                              encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> Vocab:
        if obj.get("version") != VOCAB_FORMAT_VERSION:
            raise ValueError(f"unsupported vocab version {obj.get('version')!r}")
        if obj.get("specials", SPECIALS) != SPECIALS:
            raise ValueError("vocab special-token table does not match [pad,cls,sep,dia,dib,unk]=0..5")
        return cls(list(obj["alphabet"]), [tuple(m) for m in obj["merges"]])

    @classmethod
    def load(cls, path: str | Path) -> Vocab:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    # -- encoding ------------------------------------------------------------------
    def encode_word(self, word: str) -> list[int]:
        hit = self._cache.get(word)
        if hit is not None:
            return hit
        symbols = list(word)
        while len(symbols) > 1:
            best = None
            for pair in zip(symbols, symbols[1:]):
                r = self.rank.get(pair)
                if r is not None and (best is None or r < best[0]):
                    best = (r, pair)
            if best is None:
                break
            symbols = _merge_pair(symbols, best[1])
        ids = [self.id_of.get(s, UNK) for s in symbols]
        self._cache[word] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for word in split_words(text):
            out.extend(self.encode_word(word))
        return out

    def decode(self, ids: Iterable[int]) -> str:
        parts = []
        for i in ids:
            if i == UNK:
                parts.append("�")
            elif i >= len(SPECIALS):
                parts.append(self.token_of[i])
        return "".join(parts)


def _build_ids(alphabet: Sequence[str], merges: Sequence[tuple[str, str]]) -> dict[str, int]:
    id_of = dict(SPECIALS)
    for sym in alphabet:
        id_of.setdefault(sym, len(id_of))
    for a, b in merges:
        id_of.setdefault(a + b, len(id_of))
    return id_of


def _merge_pair(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    a, b = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_bpe(corpus: Sequence[str], vocab_size: int) -> Vocab:
    """Greedy most-frequent-pair merging until ``vocab_size`` or no pair repeats.

    Ties go to the lexicographically smallest pair.
    """
    words = Counter(w for line in corpus for w in split_words(line))
    if not words:
        raise ValueError("cannot train BPE on an empty corpus")
    alphabet = sorted({ch for w in words for ch in w})
    base = len(SPECIALS) + len(alphabet)
    if vocab_size < base:
        raise ValueError(f"vocab_size {vocab_size} smaller than specials + alphabet ({base})")

    seqs = [list(w) for w in words]
    freqs = list(words.values())
    counts: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for idx, (seq, f) in enumerate(zip(seqs, freqs)):
        for pair in zip(seq, seq[1:]):
            counts[pair] += f
            where[pair].add(idx)
    heap = [(-c, p) for p, c in counts.items()]
    heapq.heapify(heap)

    merges: list[tuple[str, str]] = []
    known = set(alphabet)
    size = base
    while size < vocab_size and heap:
        neg, pair = heapq.heappop(heap)
        if counts.get(pair, 0) != -neg:
            continue  # stale entry
        if -neg < 2:
            break
        merges.append(pair)
        merged = pair[0] + pair[1]
        if merged not in known:
            known.add(merged)
            size += 1
        touched: set[tuple[str, str]] = set()
        for idx in sorted(where.pop(pair, ())):
            old = seqs[idx]
            new = _merge_pair(old, pair)
            f = freqs[idx]
            for p in zip(old, old[1:]):
                counts[p] -= f
                touched.add(p)
            for p in zip(new, new[1:]):
                counts[p] += f
                touched.add(p)
                where[p].add(idx)
            seqs[idx] = new
        counts.pop(pair, None)
        for p in touched:
            c = counts.get(p, 0)
            if c > 0:
                heapq.heappush(heap, (-c, p))
            else:
                counts.pop(p, None)
    return Vocab(alphabet, merges)


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    cls_pos: int
    dia_pos: int
    dib_pos: int
    sep_pos: int
    attn_len: int


def assemble(body_ids: Sequence[int], length: int) -> TokenSequence:
    """Layout: [cls] body[:length-4] [dia] [dib] [sep] [pad]..."""
    if length < 5:
        raise ValueError(f"sequence length must be at least 5, got {length}")
    body = list(body_ids[:length - 4])
    ids = [CLS, *body, DIA, DIB, SEP]
    attn_len = len(ids)
    ids += [PAD] * (length - attn_len)
    sep = attn_len - 1
    return TokenSequence(tuple(ids), 0, sep - 2, sep - 1, sep, attn_len)
