"""
From source text to model inputs
================================

Walks one synthetic function through every input representation: the
lexer-normalized token stream, the BPE ids the sequence models read, the two
structure sequences and the token graph built from one of them.

Run with ``python3 demos/01_inputs.py``.
"""

# %%
# A small labelled corpus. Every function plants one of five guard patterns;
# the vulnerable variant drops or weakens the guard.
from vulndistill.corpusgen import FAMILIES, generate

ds = generate(seed=0, n=300, vulnerable_ratio=0.3)
print("families:", ", ".join(FAMILIES))
print("split sizes:", len(ds.train), len(ds.val), len(ds.test))
sample = next(s for s in ds.train if s.label == 1)
print(f"\n{sample.id} (label {sample.label}):\n{sample.code}")

# %%
# Lexing and parsing are total: any text gives a tree, and the flattened
# tree gives back exactly the lexer's tokens.
from vulndistill.frontend import flatten_ast, is_balanced, lex, parse, terminals

toks = lex(sample.code)
seq = flatten_ast(parse(toks))
print("\ntokens:", len(toks), "| markers balanced:", is_balanced(seq),
      "| round trip:", terminals(seq) == [t.text for t in toks])

# %%
# Structure sequences. The AST form brackets every subtree with markers;
# the DFG form appends def -> use chains of each variable after the code.
from vulndistill.training import code_text, structure_text

print("\nnormalized code:", code_text(sample.code)[:100], "...")
print("ast structure:  ", structure_text(sample.code, "ast")[:100], "...")
print("dfg structure:   ...", structure_text(sample.code, "dfg")[-100:])

# %%
# Sub-word vocabularies are learned on the train split only. The sequence
# models see ``[cls] body [dia] [dib] [sep] pad``.
from vulndistill.tokenizer import assemble, train_bpe

vocab = train_bpe([code_text(s.code) for s in ds.train], vocab_size=400)
ids = vocab.encode(code_text(sample.code))
packed = assemble(ids, 64)
print(f"\nvocab size {len(vocab)}, body length {len(ids)}, attended length {packed.attn_len}")
print("first ids:", packed.ids[:12], "| dia/dib at", packed.dia_pos, packed.dib_pos)

# %%
# Teacher B reads a graph with one node per distinct structure token and
# edges between tokens that co-occur inside a sliding window.
from vulndistill.graphs import build_token_graph

struct_vocab = train_bpe([structure_text(s.code, "ast") for s in ds.train], vocab_size=400)
graph = build_token_graph(struct_vocab.encode(structure_text(sample.code, "ast")), window=5)
print(f"\ntoken graph: {graph.num_nodes} nodes, {len(graph.edges())} edges")
