"""Binary checkpoint format.

Layout::

    b"SAFEckpt"            8-byte magic
    version                1 byte, currently 1
    header length          4 bytes, little-endian unsigned
    header                 UTF-8 JSON, keys sorted, compact separators
    parameter blobs        little-endian float64, concatenated in header order

Header keys: kind, config, params (name, shape, offset in bytes from the
start of the blob area), vocab_hash, metrics, provenance.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..models import KINDS, Model

MAGIC = b"SAFEckpt"
VERSION = 1
_PREFIX = len(MAGIC) + 1 + 4


class CheckpointError(ValueError):
    """File is not a valid checkpoint or does not match the expected model."""


@dataclass
class Checkpoint:
    kind: str
    config: dict
    params: dict[str, np.ndarray]
    vocab_hash: str
    metrics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: Model, vocab_hash: str, metrics: dict | None = None,
                   provenance: dict | None = None) -> Checkpoint:
        return cls(model.kind, model.config_dict(),
                   {k: p.data.copy() for k, p in model.params.items()},
                   vocab_hash, metrics or {}, provenance or {})

    def to_model(self) -> Model:
        cfg = Model.from_config_dict(self.kind, self.config)
        model = Model.create(self.kind, cfg, seed=0)
        _check_names(self.kind, model, self.params)
        for name, p in model.params.items():
            if p.data.shape != self.params[name].shape:
                raise CheckpointError(f"parameter {name}: shape {self.params[name].shape}, "
                                      f"model expects {p.data.shape}")
            p.data = self.params[name].copy()
        return model

    def expect_kind(self, kind: str) -> None:
        if self.kind != kind:
            raise CheckpointError(f"expected a {kind} checkpoint, got {self.kind}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return (self.kind, self.config, self.vocab_hash, self.metrics, self.provenance) == \
            (other.kind, other.config, other.vocab_hash, other.metrics, other.provenance) and \
            list(self.params) == list(other.params) and \
            all(np.array_equal(self.params[k], other.params[k]) for k in self.params)


def _check_names(kind: str, model: Model, params: dict) -> None:
    want, got = set(model.params), set(params)
    if want != got:
        missing = sorted(want - got)
        extra = sorted(got - want)
        raise CheckpointError(f"{kind} parameter names do not match: missing {missing}, unexpected {extra}")


def to_bytes(ck: Checkpoint) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, arr in ck.params.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = {"kind": ck.kind, "config": ck.config, "params": entries,
              "vocab_hash": ck.vocab_hash, "metrics": ck.metrics, "provenance": ck.provenance}
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    return MAGIC + bytes([VERSION]) + struct.pack("<I", len(head)) + head + b"".join(blobs)


def from_bytes(raw: bytes) -> Checkpoint:
    if len(raw) < _PREFIX or raw[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic bytes)")
    version = raw[len(MAGIC)]
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}, expected {VERSION}")
    (hlen,) = struct.unpack("<I", raw[len(MAGIC) + 1:_PREFIX])
    if _PREFIX + hlen > len(raw):
        raise CheckpointError("checkpoint truncated inside the header")
    try:
        header = json.loads(raw[_PREFIX:_PREFIX + hlen].decode("utf-8"))
        kind, entries, config = header["kind"], list(header["params"]), header["config"]
        meta = [header.get(k, d) for k, d in (("vocab_hash", ""), ("metrics", {}), ("provenance", {}))]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    if not isinstance(kind, str) or kind not in KINDS:
        raise CheckpointError(f"unknown model kind {kind!r}")
    blob = raw[_PREFIX + hlen:]
    params, expected = {}, 0
    for e in entries:
        try:
            name, shape, offset = e["name"], tuple(int(n) for n in e["shape"]), e["offset"]
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"corrupt parameter entry {e!r}: {exc}") from None
        if any(n < 0 for n in shape) or not isinstance(name, str):
            raise CheckpointError(f"corrupt parameter entry {e!r}")
        size = 8 * int(np.prod(shape, dtype=np.int64))
        if offset != expected:
            raise CheckpointError(f"parameter {name}: offset {offset} != {expected}")
        if expected + size > len(blob):
            raise CheckpointError("checkpoint truncated inside parameter data")
        params[name] = np.frombuffer(blob, dtype="<f8", count=size // 8,
                                          offset=expected).astype(np.float64).reshape(shape)
        expected += size
    if expected != len(blob):
        raise CheckpointError(f"{len(blob) - expected} trailing bytes after parameter data")
    if not isinstance(config, dict) or not isinstance(meta[0], str):
        raise CheckpointError("corrupt checkpoint header: config must be an object, vocab_hash a string")
    ck = Checkpoint(kind, config, params, *meta)
    try:
        cfg = Model.from_config_dict(kind, ck.config)
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"invalid {kind} config: {exc}") from None
    fresh = Model.create(kind, cfg, seed=0)
    _check_names(kind, fresh, params)
    for name, p in fresh.params.items():
        if p.data.shape != params[name].shape:
            raise CheckpointError(f"parameter {name}: shape {params[name].shape}, "
                                  f"config implies {p.data.shape}")
    return ck


def save_checkpoint(ck: Checkpoint, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(ck))


def load_checkpoint(path: str | Path, kind: str | None = None) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    ck = from_bytes(path.read_bytes())
    if kind is not None:
        ck.expect_kind(kind)
    return ck
