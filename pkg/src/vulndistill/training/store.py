"""On-disk form of a prepared dataset.

A prepared directory holds the vocabularies, a copy of every split, the
encoded token sequences, the structure sequences and the token-graph edges,
plus ``manifest.json`` with the settings needed to rebuild the features.
Loading re-derives the features from the stored samples and vocabularies.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..data import SPLITS, DataError, Dataset, read_jsonl, write_jsonl
from ..tokenizer import Vocab
from .features import Prepared, featurize, structure_text

MANIFEST = "manifest.json"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def save_prepared(prep: Prepared, ds: Dataset, out_dir: str | Path, run_config: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prep.code_vocab.save(out / "code_vocab.json")
    prep.struct_vocab.save(out / "struct_vocab.json")
    for name in SPLITS:
        samples = ds.split(name)
        feats = prep.split(name)
        write_jsonl(samples, out / f"{name}.jsonl")
        with (out / f"{name}.tokens.jsonl").open("w", encoding="utf-8") as fh:
            for sid, y, seq in zip(feats.ids, feats.labels, feats.seqs):
                fh.write(_dump({"id": sid, "label": int(y), "ids": list(seq.ids),
                                "attn_len": seq.attn_len}) + "\n")
        with (out / f"{name}.structure.jsonl").open("w", encoding="utf-8") as fh:
            for s in samples:
                fh.write(_dump({"id": s.id, "structure": structure_text(s.code, prep.structure_mode)}) + "\n")
        with (out / f"{name}.graphs.jsonl").open("w", encoding="utf-8") as fh:
            for sid, g in zip(feats.ids, feats.graphs):
                fh.write(_dump({"id": sid, "nodes": g.node_ids,
                                "edges": [list(e) for e in sorted(g.edges())]}) + "\n")
    manifest = {
        "name": prep.name, "seq_len": prep.seq_len, "structure_mode": prep.structure_mode,
        "window": prep.window, "code_vocab": prep.code_vocab.digest(),
        "struct_vocab": prep.struct_vocab.digest(),
        "sizes": {name: len(prep.split(name)) for name in SPLITS}, "run_config": run_config,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not (path / MANIFEST).exists():
        raise DataError(f"{path} is not a prepared directory (no {MANIFEST}); run 'prepare' first")
    return json.loads((path / MANIFEST).read_text(encoding="utf-8"))


def load_prepared(path: str | Path, splits=SPLITS) -> Prepared:
    path = Path(path)
    m = load_manifest(path)
    code_vocab = Vocab.load(path / "code_vocab.json")
    struct_vocab = Vocab.load(path / "struct_vocab.json")
    if code_vocab.digest() != m["code_vocab"] or struct_vocab.digest() != m["struct_vocab"]:
        raise DataError(f"{path}: vocabulary files do not match the manifest hashes")
    feats = {}
    for name in splits:
        samples = read_jsonl(path / f"{name}.jsonl")
        feats[name] = featurize(samples, code_vocab, struct_vocab, m["seq_len"],
                                m["structure_mode"], m["window"])
    return Prepared(m["name"], code_vocab, struct_vocab, m["seq_len"], m["structure_mode"],
                    m["window"], feats)
