"""Structure-preserving linearization of syntax trees and data-flow graphs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .ast import AstNode
from .lexer import lex
from .parser import parse

OPEN, CLOSE, TERMINAL = "open", "close", "terminal"


@dataclass(frozen=True)
class StructureToken:
    tag: str
    text: str

    def render(self) -> str:
        if self.tag == OPEN:
            return f"\u27e8{self.text}\u27e9"
        if self.tag == CLOSE:
            return f"\u27e8/{self.text}\u27e9"
        return escape_terminal(self.text)


def Open(kind: str) -> StructureToken:  # noqa: N802
    return StructureToken(OPEN, kind)


def Close(kind: str) -> StructureToken:  # noqa: N802
    return StructureToken(CLOSE, kind)


def Terminal(text: str) -> StructureToken:  # noqa: N802
    return StructureToken(TERMINAL, text)


def escape_terminal(text: str) -> str:
    # spaces are escaped too so a line splits back into items unambiguously
    return text.replace("\t", "\\t").replace("\n", "\\n").replace(" ", "\\s")


def flatten_ast(root: AstNode) -> list[StructureToken]:
    """Depth-first: Open(kind) before an inner node's children, Close(kind) after."""
    out: list[StructureToken] = []
    stack: list[tuple[AstNode, bool]] = [(root, False)]
    while stack:
        node, closing = stack.pop()
        if closing:
            out.append(Close(node.kind))
        elif node.token is not None:
            out.append(Terminal(node.token.text))
        else:
            out.append(Open(node.kind))
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(node.children))
    return out


def terminals(seq: Iterable[StructureToken]) -> list[str]:
    return [t.text for t in seq if t.tag == TERMINAL]


def is_balanced(seq: Iterable[StructureToken]) -> bool:
    stack: list[str] = []
    for t in seq:
        if t.tag == OPEN:
            stack.append(t.text)
        elif t.tag == CLOSE:
            if not stack or stack.pop() != t.text:
                return False
    return not stack


def serialize(seq: Iterable[StructureToken]) -> str:
    """One line: items separated by single spaces."""
    return " ".join(t.render() for t in seq)


def dfg_sequence(root: AstNode) -> list[StructureToken]:
    """Terminal stream followed by one bracketed group per def->use edge."""
    from .dfg import extract_dfg

    out = [Terminal(leaf.token.text) for leaf in root.leaves()]
    graph = extract_dfg(root)
    for src, dst in sorted(graph.edges, key=lambda e: (e[1].index, e[0].index, e[0].name)):
        out += [Open("dfg_edge"), Terminal(src.name), Terminal(str(src.index)),
                Terminal(str(dst.index)), Close("dfg_edge")]
    return out


def structure_sequence_of(code: str, mode: str = "ast", ast: AstNode | None = None) -> list[StructureToken]:
    """Structure sequence of a source function in ``ast`` or ``dfg`` mode.

    ``ast`` overrides the built-in parser (e.g. a tree imported from JSON).
    """
    if mode not in ("ast", "dfg"):
        raise ValueError(f"unknown structure mode {mode!r}; expected 'ast' or 'dfg'")
    root = ast if ast is not None else parse(lex(code))
    return flatten_ast(root) if mode == "ast" else dfg_sequence(root)
