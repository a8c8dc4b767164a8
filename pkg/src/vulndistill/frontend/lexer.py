"""Tokenizer for C-like source text.

The lexer is total: comments and whitespace are dropped, preprocessor lines
are lexed like ordinary text, and any byte it cannot classify becomes a
single-character operator token.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset("""
auto break case char const continue default do double else enum extern float
for goto if inline int long register restrict return short signed sizeof static
struct switch typedef union unsigned void volatile while bool _Bool size_t
""".split())

TYPE_KEYWORDS = frozenset("""
char const double enum float int long short signed struct union unsigned void
volatile static extern register auto inline restrict bool _Bool size_t
""".split())

# longest operators first so the alternation is greedy
_OPERATORS = sorted("""
<<= >>= ... -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^=
+ - * / % < > = ! ~ & | ^ ? : .
""".split(), key=len, reverse=True)
_PUNCT = "(){}[];,#"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?(?:\*/|\Z))
  | (?P<string>"(?:\\.|[^"\\\n])*"?)
  | (?P<char>'(?:\\.|[^'\\\n])*'?)
  | (?P<number>(?:0[xX][0-9a-fA-F]+|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)[uUlLfF]*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>""" + "|".join(re.escape(o) for o in _OPERATORS) + r""")
  | (?P<punct>[""" + re.escape(_PUNCT) + r"""])
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)

TOKEN_KINDS = ("identifier", "keyword", "number", "string-literal", "char-literal",
               "operator", "punctuation")


@dataclass(frozen=True)
class LexToken:
    text: str
    kind: str
    line: int = 0
    col: int = 0


def lex(source: str) -> list[LexToken]:
    tokens: list[LexToken] = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(source):
        group = m.lastgroup
        text = m.group()
        start = m.start()
        if group not in ("ws", "comment"):
            if group == "ident":
                kind = "keyword" if text in KEYWORDS else "identifier"
            else:
                kind = {"string": "string-literal", "char": "char-literal",
                        "number": "number", "op": "operator", "punct": "punctuation",
                        "other": "operator"}[group]
            tokens.append(LexToken(text, kind, line, start - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = start + text.rfind("\n") + 1
    return tokens


def normalize(source: str) -> str:
    """Token texts joined by single spaces (comments and layout removed)."""
    return " ".join(t.text for t in lex(source))
