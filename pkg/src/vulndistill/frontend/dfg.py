"""Def-use data-flow graphs via reaching definitions over the syntax tree.

Branches join by union, loops get one extra pass with the loop-back state
merged in, and ``return``/``break``/``continue`` cut the fall-through path.
Uses with no reaching definition are fed from a synthetic entry definition
at leaf index -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .ast import AstNode

ENTRY_INDEX = -1

# None means "unreachable"
State = dict[str, frozenset] | None


@dataclass(frozen=True, order=True)
class DfgNode:
    index: int
    name: str
    role: str  # "def" or "use"


@dataclass
class DataFlowGraph:
    nodes: list[DfgNode] = field(default_factory=list)
    edges: list[tuple[DfgNode, DfgNode]] = field(default_factory=list)

    def incoming(self, node: DfgNode) -> list[DfgNode]:
        return [s for s, d in self.edges if d == node]


def _join(*states: State) -> State:
    live = [s for s in states if s is not None]
    if not live:
        return None
    if len(live) == 1:
        return dict(live[0])
    out: dict[str, frozenset] = {}
    for s in live:
        for name, defs in s.items():
            out[name] = out.get(name, frozenset()) | defs
    return out


class _Loop:
    def __init__(self):
        self.breaks: list[State] = []
        self.continues: list[State] = []


class _Analyzer:
    def __init__(self, root: AstNode):
        self.index = {id(leaf): i for i, leaf in enumerate(root.leaves())}
        self.nodes: set[DfgNode] = set()
        self.edges: set[tuple[DfgNode, DfgNode]] = set()
        self.loops: list[_Loop] = []
        self.labels: dict[str, list[State]] = {}

    # -- events ------------------------------------------------------------------
    def use(self, leaf: AstNode, state: State) -> None:
        if state is None:
            return
        node = DfgNode(self.index[id(leaf)], leaf.token.text, "use")
        self.nodes.add(node)
        defs = state.get(node.name)
        if not defs:
            entry = DfgNode(ENTRY_INDEX, node.name, "def")
            self.nodes.add(entry)
            defs = frozenset([entry])
        for d in defs:
            self.edges.add((d, node))

    def define(self, leaf: AstNode, state: State) -> State:
        if state is None:
            return None
        node = DfgNode(self.index[id(leaf)], leaf.token.text, "def")
        self.nodes.add(node)
        out = dict(state)
        out[node.name] = frozenset([node])
        return out

    # -- functions -----------------------------------------------------------------
    def run(self, root: AstNode) -> None:
        for item in (root.children if root.kind == "translation_unit" else [root]):
            if item.kind == "function_definition":
                self.function(item)
            elif item.token is None:
                self.stmt(item, {})
            elif item.kind == "identifier":
                self.use(item, {})

    def function(self, fn: AstNode) -> None:
        state: State = {}
        for child in fn.children:
            if child.kind == "parameter_list":
                for param in child.children:
                    if param.kind == "parameter_declaration":
                        name = _declared_name(param.children[-1])
                        if name is not None:
                            state = self.define(name, state)
            elif child.kind == "compound_statement":
                self.stmt(child, state)

    # -- statements ------------------------------------------------------------------
    def stmt(self, node: AstNode, state: State) -> State:
        kind = node.kind
        ch = node.children
        if node.token is not None:
            return self.expr(node, state)
        if kind == "compound_statement":
            for c in ch:
                if c.token is None:
                    state = self.stmt(c, state)
            return state
        if kind == "declaration":
            return self.declaration(node, state)
        if kind == "if_statement":
            parts = [c for c in ch if c.token is None or c.kind in ("identifier", "literal")]
            state = self.expr(parts[0], state)
            then = self.stmt(parts[1], state)
            other = self.stmt(parts[2], state) if len(parts) > 2 else state
            return _join(then, other)
        if kind == "while_statement":
            cond, body = _non_punct(ch)
            return self.loop(state, cond=cond, body=body)
        if kind == "do_statement":
            body, cond = _non_punct(ch)
            return self.loop(state, cond=cond, body=body, body_first=True)
        if kind == "for_statement":
            return self.for_loop(node, state)
        if kind == "return_statement":
            for c in ch[1:]:
                state = self.expr(c, state)
            return None
        if kind == "break_statement":
            if self.loops:
                self.loops[-1].breaks.append(state)
            return None
        if kind == "continue_statement":
            if self.loops:
                self.loops[-1].continues.append(state)
            return None
        if kind == "goto_statement":
            self.labels.setdefault(ch[1].token.text, []).append(state)
            return None
        if kind == "labeled_statement":
            state = _join(state, *self.labels.get(ch[0].token.text, []))
            return self.stmt(ch[2], state)
        if kind == "switch_statement":
            cond, body = _non_punct(ch)
            state = self.expr(cond, state)
            ctx = _Loop()
            self.loops.append(ctx)
            end = self.switch_body(body, state)
            self.loops.pop()
            return _join(end, *ctx.breaks)
        if kind == "case_statement":
            return state
        # expression_statement, error and anything else: evaluate children in order
        for c in ch:
            state = self.expr(c, state)
        return state

    def switch_body(self, body: AstNode, entry: State) -> State:
        if body.kind != "compound_statement":
            return _join(entry, self.stmt(body, entry))
        state: State = None
        for c in body.children:
            if c.token is not None:
                continue
            if c.kind == "case_statement":
                state = _join(state, entry)
            state = self.stmt(c, state)
        return _join(state, entry)

    def declaration(self, node: AstNode, state: State) -> State:
        for c in node.children:
            if c.kind == "identifier":
                state = self.define(c, state)
            elif c.kind == "init_declarator":
                target, _, init = c.children
                state = self.expr(init, state)
                state = self.declarator(target, state)
            elif c.kind in ("pointer_declarator", "array_declarator"):
                state = self.declarator(c, state)
        return state

    def declarator(self, node: AstNode, state: State) -> State:
        if node.kind == "array_declarator":
            for size in node.children[2:-1]:
                state = self.expr(size, state)
        name = _declared_name(node)
        return self.define(name, state) if name is not None else state

    def loop(self, state: State, cond: AstNode | None, body: AstNode,
             update: AstNode | None = None, body_first: bool = False) -> State:
        ctx = _Loop()
        self.loops.append(ctx)
        head = state
        exit_state: State = None
        for _ in range(2):
            ctx.breaks, ctx.continues = [], []
            if body_first:
                after = self.stmt(body, head)
                after = _join(after, *ctx.continues)
                exit_state = self.expr(cond, after) if cond is not None else after
                back = exit_state
            else:
                exit_state = self.expr(cond, head) if cond is not None else head
                after = self.stmt(body, exit_state)
                after = _join(after, *ctx.continues)
                back = self.expr(update, after) if update is not None else after
            head = _join(state, back)
        self.loops.pop()
        if cond is None:
            return _join(*ctx.breaks)
        return _join(exit_state, *ctx.breaks)

    def for_loop(self, node: AstNode, state: State) -> State:
        # for ( init ; cond ; update ) body -- slots located by their separators
        ch = node.children
        semis = [i for i, c in enumerate(ch) if c.token is not None and c.token.text == ";"]
        rparen = max(i for i, c in enumerate(ch) if c.token is not None and c.token.text == ")")
        init_decl = next((c for c in ch if c.kind == "declaration"), None)
        if init_decl is not None:
            state = self.declaration(init_decl, state)
            cond_start = ch.index(init_decl) + 1
            cond_slot = ch[cond_start:semis[0]] if semis else []
            update_slot = ch[semis[0] + 1:rparen] if semis else []
        else:
            init_slot = ch[2:semis[0]]
            for c in init_slot:
                state = self.expr(c, state)
            cond_slot = ch[semis[0] + 1:semis[1]]
            update_slot = ch[semis[1] + 1:rparen]
        cond = cond_slot[0] if cond_slot else None
        update = update_slot[0] if update_slot else None
        return self.loop(state, cond=cond, body=ch[rparen + 1], update=update)

    # -- expressions ------------------------------------------------------------------
    def expr(self, node: AstNode, state: State) -> State:
        if state is None:
            return None
        kind = node.kind
        if node.token is not None:
            if kind == "identifier":
                self.use(node, state)
            return state
        ch = node.children
        if kind == "assignment":
            lhs, op, rhs = ch
            state = self.expr(rhs, state)
            if lhs.kind == "identifier":
                if op.token.text != "=":
                    self.use(lhs, state)
                return self.define(lhs, state)
            return self.expr(lhs, state)
        if kind in ("update_expression", "unary_expression") and _is_update(node):
            target = ch[0] if kind == "update_expression" else ch[1]
            if target.kind == "identifier":
                self.use(target, state)
                return self.define(target, state)
            return self.expr(target, state)
        if kind == "call_expression":
            callee, args = ch
            if callee.kind != "identifier":
                state = self.expr(callee, state)
            return self.expr(args, state)
        if kind == "field_expression":
            return self.expr(ch[0], state)
        if kind == "conditional_expression":
            cond, _, then, _, other = ch
            state = self.expr(cond, state)
            return _join(self.expr(then, state), self.expr(other, state))
        if kind in ("declaration", "compound_statement"):
            return self.stmt(node, state)
        for c in ch:
            state = self.expr(c, state)
        return state


def _is_update(node: AstNode) -> bool:
    ops = [c.token.text for c in node.children if c.token is not None and c.kind == "operator"]
    return bool(ops) and ops[0] in ("++", "--") if node.kind == "unary_expression" else True


def _non_punct(children: list[AstNode]) -> list[AstNode]:
    """Children minus keywords and punctuation (statement slots)."""
    return [c for c in children if c.token is None or c.kind in ("identifier", "literal")]


def _declared_name(node: AstNode) -> AstNode | None:
    while node.token is None:
        if node.kind == "pointer_declarator":
            node = node.children[-1]
        elif node.kind == "array_declarator":
            node = node.children[0]
        elif node.kind == "init_declarator":
            node = node.children[0]
        else:
            return None
    return node if node.kind == "identifier" else None


def extract_dfg(root: AstNode) -> DataFlowGraph:
    analyzer = _Analyzer(root)
    analyzer.run(root)
    nodes = sorted(analyzer.nodes)
    edges = sorted(analyzer.edges, key=lambda e: (e[1].index, e[0].index, e[0].name))
    return DataFlowGraph(nodes, edges)
