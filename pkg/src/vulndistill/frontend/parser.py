"""Recursive-descent parser for a C subset.

Covers function definitions, declarations, if/else, while, do/while, for,
switch/case labels, return/break/continue/goto, blocks and expressions with
C operator precedence. Anything the grammar cannot place is wrapped in an
``error`` node holding the raw tokens, so ``parse`` never fails and every
token survives as exactly one leaf, in order.
"""
from __future__ import annotations

from .ast import AstNode, leaf
from .lexer import TYPE_KEYWORDS, LexToken

MAX_DEPTH = 64

ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>=".split())

# binary precedence levels, loosest first
BINARY_LEVELS = [
    {"||"}, {"&&"}, {"|"}, {"^"}, {"&"}, {"==", "!="},
    {"<", ">", "<=", ">="}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "%"},
]
UNARY_OPS = frozenset("- + ! ~ * & ++ --".split())
DECL_FOLLOW = frozenset("; = , [ ) (".split())


class _Fail(Exception):
    pass


class Parser:
    def __init__(self, tokens: list[LexToken]):
        self.toks = tokens
        self.pos = 0
        self.depth = 0

    # -- token helpers ---------------------------------------------------------
    def peek(self, ahead: int = 0) -> LexToken | None:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.text == text and tok.kind in ("operator", "punctuation", "keyword")

    def take(self, kind: str | None = None) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _Fail("unexpected end of input")
        self.pos += 1
        return leaf(tok, kind)

    def expect(self, text: str) -> AstNode:
        if not self.at(text):
            raise _Fail(f"expected {text!r}")
        return self.take()

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise _Fail("nesting too deep")

    # -- top level -------------------------------------------------------------
    def translation_unit(self) -> AstNode:
        items = []
        while self.peek() is not None:
            start = self.pos
            try:
                items.append(self.external_item())
            except (_Fail, RecursionError):
                self.pos = start
                self.depth = 0
                items.append(self.recover())
        return AstNode("translation_unit", items)

    def external_item(self) -> AstNode:
        start = self.pos
        try:
            return self.function_definition()
        except _Fail:
            self.pos = start
            self.depth = 0
        return self.declaration()

    def function_definition(self) -> AstNode:
        children = self.specifiers()
        children.append(self.declarator())
        children.append(self.parameter_list())
        if not self.at("{"):
            raise _Fail("expected function body")
        children.append(self.compound_statement())
        return AstNode("function_definition", children)

    def recover(self) -> AstNode:
        """Consume up to a ';' or through one balanced brace block."""
        children = []
        depth = 0
        while self.peek() is not None:
            tok = self.peek()
            if tok.text == "}" and depth == 0 and children:
                break
            children.append(self.take())
            if tok.kind != "punctuation":
                continue
            if tok.text in "({[":
                depth += 1
            elif tok.text in ")}]":
                depth = max(depth - 1, 0)
                if tok.text == "}" and depth == 0:
                    break
            elif tok.text == ";" and depth == 0:
                break
        return AstNode("error", children)

    # -- declarations ------------------------------------------------------------
    def starts_declaration(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind == "keyword" and tok.text in TYPE_KEYWORDS:
            return True
        if tok.kind != "identifier":
            return False
        # typedef-name heuristic: NAME [*...] NAME followed by a declarator continuation
        i = 1
        while self.at("*", i):
            i += 1
        nxt, after = self.peek(i), self.peek(i + 1)
        return (nxt is not None and nxt.kind == "identifier"
                and after is not None and after.text in DECL_FOLLOW)

    def specifiers(self) -> list[AstNode]:
        out = []
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind == "keyword" and tok.text in TYPE_KEYWORDS:
                out.append(self.take("type"))
                if tok.text in ("struct", "union", "enum"):
                    nxt = self.peek()
                    if nxt is not None and nxt.kind == "identifier":
                        out.append(self.take("type"))
                continue
            if not out and tok.kind == "identifier":
                out.append(self.take("type"))
                continue
            break
        if not out:
            raise _Fail("expected type")
        return out

    def declarator(self) -> AstNode:
        self.enter()
        try:
            if self.at("*"):
                star = self.take()
                quals = []
                while self.peek() is not None and self.peek().text in ("const", "volatile", "restrict"):
                    quals.append(self.take("type"))
                return AstNode("pointer_declarator", [star, *quals, self.declarator()])
            tok = self.peek()
            if tok is None or tok.kind != "identifier":
                raise _Fail("expected declarator name")
            node = self.take()
            while self.at("["):
                parts = [node, self.take()]
                if not self.at("]"):
                    parts.append(self.expression())
                parts.append(self.expect("]"))
                node = AstNode("array_declarator", parts)
            return node
        finally:
            self.depth -= 1

    def parameter_list(self) -> AstNode:
        children = [self.expect("(")]
        if self.at("void") and self.at(")", 1):
            children.append(self.take("type"))
        elif not self.at(")"):
            while True:
                if self.at("..."):
                    children.append(self.take())
                else:
                    params = self.specifiers()
                    if not self.at(",") and not self.at(")"):
                        params.append(self.declarator())
                    children.append(AstNode("parameter_declaration", params))
                if not self.at(","):
                    break
                children.append(self.take())
        children.append(self.expect(")"))
        return AstNode("parameter_list", children)

    def declaration(self) -> AstNode:
        children = self.specifiers()
        if not self.at(";"):
            while True:
                decl = self.declarator()
                if self.at("="):
                    eq = self.take()
                    init = self.initializer()
                    decl = AstNode("init_declarator", [decl, eq, init])
                children.append(decl)
                if not self.at(","):
                    break
                children.append(self.take())
        children.append(self.expect(";"))
        return AstNode("declaration", children)

    def initializer(self) -> AstNode:
        if not self.at("{"):
            return self.assignment()
        self.enter()
        try:
            children = [self.take()]
            while not self.at("}"):
                children.append(self.initializer())
                if self.at(","):
                    children.append(self.take())
                elif not self.at("}"):
                    raise _Fail("bad initializer list")
            children.append(self.take())
            return AstNode("initializer_list", children)
        finally:
            self.depth -= 1

    # -- statements --------------------------------------------------------------
    def compound_statement(self) -> AstNode:
        children = [self.expect("{")]
        while self.peek() is not None and not self.at("}"):
            children.append(self.statement_or_error())
        if self.peek() is not None:
            children.append(self.take())
        return AstNode("compound_statement", children)

    def statement_or_error(self) -> AstNode:
        start, depth = self.pos, self.depth
        try:
            return self.statement()
        except (_Fail, RecursionError):
            self.pos, self.depth = start, depth
            return self.recover()

    def statement(self) -> AstNode:
        self.enter()
        try:
            return self._statement()
        finally:
            self.depth -= 1

    def _statement(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _Fail("unexpected end of input")
        t = tok.text if tok.kind in ("keyword", "punctuation", "operator") else None
        if t == "{":
            return self.compound_statement()
        if t == "if":
            children = [self.take(), self.expect("("), self.expression(), self.expect(")"),
                        self.statement()]
            if self.at("else"):
                children += [self.take(), self.statement()]
            return AstNode("if_statement", children)
        if t == "while":
            return AstNode("while_statement", [self.take(), self.expect("("), self.expression(),
                                               self.expect(")"), self.statement()])
        if t == "do":
            return AstNode("do_statement", [self.take(), self.statement(), self.expect("while"),
                                            self.expect("("), self.expression(), self.expect(")"),
                                            self.expect(";")])
        if t == "for":
            return self.for_statement()
        if t == "switch":
            return AstNode("switch_statement", [self.take(), self.expect("("), self.expression(),
                                                self.expect(")"), self.statement()])
        if t == "case":
            return AstNode("case_statement", [self.take(), self.conditional(), self.expect(":")])
        if t == "default":
            return AstNode("case_statement", [self.take(), self.expect(":")])
        if t == "return":
            children = [self.take()]
            if not self.at(";"):
                children.append(self.expression())
            children.append(self.expect(";"))
            return AstNode("return_statement", children)
        if t in ("break", "continue"):
            return AstNode(f"{t}_statement", [self.take(), self.expect(";")])
        if t == "goto":
            name = self.peek(1)
            if name is None or name.kind != "identifier":
                raise _Fail("goto needs a label")
            return AstNode("goto_statement", [self.take(), self.take("label"), self.expect(";")])
        if t == ";":
            return AstNode("expression_statement", [self.take()])
        if tok.kind == "identifier" and self.at(":", 1):
            return AstNode("labeled_statement", [self.take("label"), self.take(), self.statement()])
        if self.starts_declaration():
            start = self.pos
            try:
                return self.declaration()
            except _Fail:
                self.pos = start
        return AstNode("expression_statement", [self.expression(), self.expect(";")])

    def for_statement(self) -> AstNode:
        children = [self.take(), self.expect("(")]
        if self.starts_declaration():
            children.append(self.declaration())
        else:
            if not self.at(";"):
                children.append(self.expression())
            children.append(self.expect(";"))
        if not self.at(";"):
            children.append(self.expression())
        children.append(self.expect(";"))
        if not self.at(")"):
            children.append(self.expression())
        children.append(self.expect(")"))
        children.append(self.statement())
        return AstNode("for_statement", children)

    # -- expressions ---------------------------------------------------------------
    def expression(self) -> AstNode:
        self.enter()
        try:
            node = self.assignment()
            if not self.at(","):
                return node
            parts = [node]
            while self.at(","):
                parts += [self.take(), self.assignment()]
            return AstNode("comma_expression", parts)
        finally:
            self.depth -= 1

    def assignment(self) -> AstNode:
        lhs = self.conditional()
        tok = self.peek()
        if tok is not None and tok.kind == "operator" and tok.text in ASSIGN_OPS:
            op = self.take()
            self.enter()
            try:
                return AstNode("assignment", [lhs, op, self.assignment()])
            finally:
                self.depth -= 1
        return lhs

    def conditional(self) -> AstNode:
        cond = self.binary(0)
        if not self.at("?"):
            return cond
        self.enter()
        try:
            q = self.take()
            then = self.expression()
            colon = self.expect(":")
            return AstNode("conditional_expression", [cond, q, then, colon, self.conditional()])
        finally:
            self.depth -= 1

    def binary(self, level: int) -> AstNode:
        if level == len(BINARY_LEVELS):
            return self.unary()
        ops = BINARY_LEVELS[level]
        node = self.binary(level + 1)
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "operator" or tok.text not in ops:
                return node
            op = self.take()
            node = AstNode("binary_expression", [node, op, self.binary(level + 1)])

    def is_type_start(self, ahead: int) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.kind == "keyword" and tok.text in TYPE_KEYWORDS

    def type_name(self) -> list[AstNode]:
        parts = self.specifiers()
        while self.at("*"):
            parts.append(self.take())
        return parts

    def unary(self) -> AstNode:
        self.enter()
        try:
            tok = self.peek()
            if tok is None:
                raise _Fail("unexpected end of input")
            if tok.kind == "operator" and tok.text in UNARY_OPS:
                return AstNode("unary_expression", [self.take(), self.unary()])
            if tok.kind == "keyword" and tok.text == "sizeof":
                kw = self.take()
                if self.at("(") and self.is_type_start(1):
                    return AstNode("unary_expression",
                                   [kw, self.take(), *self.type_name(), self.expect(")")])
                return AstNode("unary_expression", [kw, self.unary()])
            if self.at("(") and self.is_type_start(1):
                lp = self.take()
                parts = self.type_name()
                return AstNode("cast_expression", [lp, *parts, self.expect(")"), self.unary()])
            return self.postfix()
        finally:
            self.depth -= 1

    def postfix(self) -> AstNode:
        node = self.primary()
        while True:
            if self.at("("):
                args = [self.take()]
                if not self.at(")"):
                    args.append(self.assignment())
                    while self.at(","):
                        args += [self.take(), self.assignment()]
                args.append(self.expect(")"))
                node = AstNode("call_expression", [node, AstNode("argument_list", args)])
            elif self.at("["):
                node = AstNode("subscript_expression",
                               [node, self.take(), self.expression(), self.expect("]")])
            elif self.at(".") or self.at("->"):
                op = self.take()
                name = self.peek()
                if name is None or name.kind != "identifier":
                    raise _Fail("expected field name")
                node = AstNode("field_expression", [node, op, self.take("field")])
            elif self.at("++") or self.at("--"):
                node = AstNode("update_expression", [node, self.take()])
            else:
                return node

    def primary(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _Fail("unexpected end of input")
        if tok.kind == "identifier":
            return self.take()
        if tok.kind in ("number", "char-literal"):
            return self.take()
        if tok.kind == "string-literal":
            first = self.take()
            if self.peek() is None or self.peek().kind != "string-literal":
                return first
            parts = [first]
            while self.peek() is not None and self.peek().kind == "string-literal":
                parts.append(self.take())
            return AstNode("concatenated_string", parts)
        if self.at("("):
            return AstNode("parenthesized_expression",
                           [self.take(), self.expression(), self.expect(")")])
        raise _Fail(f"unexpected token {tok.text!r}")


def parse(tokens: list[LexToken]) -> AstNode:
    """Parse a token list into a ``translation_unit`` node. Never raises."""
    return Parser(list(tokens)).translation_unit()


def parse_source(source: str) -> AstNode:
    from .lexer import lex
    return parse(lex(source))
