"""Labelled code samples, split datasets and their JSONL form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SPLITS = ("train", "val", "test")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class CodeSample:
    id: str
    code: str
    label: int

    def to_json(self) -> dict:
        return {"id": self.id, "code": self.code, "label": self.label}


@dataclass
class Dataset:
    name: str
    train: list[CodeSample] = field(default_factory=list)
    val: list[CodeSample] = field(default_factory=list)
    test: list[CodeSample] = field(default_factory=list)

    def split(self, name: str) -> list[CodeSample]:
        if name not in SPLITS:
            raise DataError(f"unknown split {name!r}; valid splits: {', '.join(SPLITS)}")
        return getattr(self, name)

    def all_samples(self) -> list[CodeSample]:
        return self.train + self.val + self.test

    def check_disjoint(self) -> None:
        seen: set[str] = set()
        for s in self.all_samples():
            if s.id in seen:
                raise DataError(f"sample id {s.id!r} appears more than once")
            seen.add(s.id)


def parse_sample(line: str, lineno: int, source: str = "<input>") -> CodeSample:
    where = f"{source}: line {lineno}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object")
    for key in ("id", "code", "label"):
        if key not in obj:
            raise DataError(f"{where}: missing {key!r} field")
    if not isinstance(obj["code"], str):
        raise DataError(f"{where}: 'code' must be a string")
    label = obj["label"]
    if isinstance(label, bool) or label not in (0, 1):
        raise DataError(f"{where}: 'label' must be 0 or 1, got {label!r}")
    return CodeSample(str(obj["id"]), obj["code"], int(label))


def read_jsonl(path: str | Path) -> list[CodeSample]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                out.append(parse_sample(line, lineno, str(path)))
    return out


def write_jsonl(samples: Iterable[CodeSample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def stratified_split(samples: Sequence[CodeSample], seed: int,
                     fractions=(0.7, 0.15, 0.15)) -> tuple[list, list, list]:
    """Seeded 70/15/15 split that keeps the class ratio in every part."""
    rng = np.random.default_rng(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for label in (0, 1):
        group = [s for s in samples if s.label == label]
        order = rng.permutation(len(group))
        n_train = int(round(len(group) * fractions[0]))
        n_val = int(round(len(group) * fractions[1]))
        for rank, idx in enumerate(order):
            part = 0 if rank < n_train else 1 if rank < n_train + n_val else 2
            parts[part].append(group[idx])
    for part in parts:
        perm = rng.permutation(len(part))
        part[:] = [part[i] for i in perm]
    return parts


def load_dataset(path: str | Path, seed: int = 0, name: str | None = None) -> Dataset:
    """Load a directory of ``{train,val,test}.jsonl`` or split a single JSONL file."""
    path = Path(path)
    if path.is_dir():
        missing = [s for s in SPLITS if not (path / f"{s}.jsonl").exists()]
        if missing:
            raise DataError(f"{path}: missing split files {', '.join(m + '.jsonl' for m in missing)}")
        ds = Dataset(name or path.name, *(read_jsonl(path / f"{s}.jsonl") for s in SPLITS))
    elif path.exists():
        ds = Dataset(name or path.stem, *stratified_split(read_jsonl(path), seed))
    else:
        raise DataError(f"dataset not found: {path}")
    ds.check_disjoint()
    return ds


def save_dataset(ds: Dataset, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for s in SPLITS:
        write_jsonl(ds.split(s), out / f"{s}.jsonl")
