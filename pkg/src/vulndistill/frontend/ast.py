from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .lexer import LexToken


@dataclass
class AstNode:
    """Syntax tree node. Leaves carry exactly one token; inner nodes carry none."""

    kind: str
    children: list[AstNode] = field(default_factory=list)
    token: LexToken | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def text(self) -> str | None:
        return self.token.text if self.token is not None else None

    def leaves(self) -> Iterator[AstNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            if node.token is not None:
                yield node
            else:
                stack.extend(reversed(node.children))

    def walk(self) -> Iterator[AstNode]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def count(self, kind: str) -> int:
        return sum(1 for n in self.walk() if n.kind == kind)

    def pretty(self, indent: int = 0) -> str:
        pad = "  " * indent
        if self.token is not None:
            return f"{pad}{self.kind} {self.token.text!r}"
        lines = [f"{pad}{self.kind}"]
        lines.extend(c.pretty(indent + 1) for c in self.children)
        return "\n".join(lines)


def leaf(tok: LexToken, kind: str | None = None) -> AstNode:
    if kind is None:
        kind = {"identifier": "identifier", "number": "literal", "string-literal": "literal",
                "char-literal": "literal"}.get(tok.kind, tok.kind)
    return AstNode(kind, [], tok)
