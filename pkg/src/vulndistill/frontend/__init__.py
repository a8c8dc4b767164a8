"""C-like source frontend: lexing, parsing, structure sequences, data flow."""
from .ast import AstNode
from .astjson import load_ast_file, node_from_json, node_to_json
from .dfg import DataFlowGraph, DfgNode, extract_dfg
from .lexer import LexToken, lex, normalize
from .parser import parse, parse_source
from .structure import (
    Close, Open, StructureToken, Terminal, dfg_sequence, flatten_ast, is_balanced,
    serialize, structure_sequence_of, terminals,
)

__all__ = [
    "AstNode", "Close", "DataFlowGraph", "DfgNode", "LexToken", "Open", "StructureToken",
    "Terminal", "dfg_sequence", "extract_dfg", "flatten_ast", "is_balanced", "lex",
    "load_ast_file", "node_from_json", "node_to_json", "normalize", "parse", "parse_source",
    "serialize", "structure_sequence_of", "terminals",
]
