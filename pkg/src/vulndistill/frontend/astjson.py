"""Import syntax trees produced by an external parser.

Each sample is a JSON object ``{"id", "kind", "children": [...], "text"}``
with nested children of the same shape (``id`` only on the root). A node
with ``text`` and no children is a leaf.
"""
from __future__ import annotations

import json
from pathlib import Path

from .ast import AstNode
from .lexer import LexToken, lex


def node_from_json(obj: dict) -> AstNode:
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise ValueError("AST node without a string 'kind'")
    children = obj.get("children") or []
    text = obj.get("text")
    if text is not None and not children:
        toks = lex(text)
        tok_kind = toks[0].kind if len(toks) == 1 else "identifier"
        return AstNode(kind, [], LexToken(text, tok_kind))
    return AstNode(kind, [node_from_json(c) for c in children])


def node_to_json(node: AstNode, sample_id: str | None = None) -> dict:
    out: dict = {}
    if sample_id is not None:
        out["id"] = sample_id
    out["kind"] = node.kind
    if node.token is not None:
        out["text"] = node.token.text
        out["children"] = []
    else:
        out["children"] = [node_to_json(c) for c in node.children]
    return out


def load_ast_file(path: str | Path) -> dict[str, AstNode]:
    """Load trees keyed by sample id from a JSON array or a JSON-lines file."""
    raw = Path(path).read_text(encoding="utf-8")
    stripped = raw.lstrip()
    if stripped.startswith("["):
        objs = json.loads(raw)
    else:
        objs = []
        for lineno, line in enumerate(raw.splitlines(), 1):
            if not line.strip():
                continue
            try:
                objs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    trees = {}
    for obj in objs:
        if "id" not in obj:
            raise ValueError("AST sample without an 'id'")
        trees[str(obj["id"])] = node_from_json(obj)
    return trees
