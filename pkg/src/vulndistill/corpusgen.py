"""Seeded generator of small labelled C functions with planted flaws.

Each family has a safe and a vulnerable variant that differ only in the
planted pattern. Identifiers, constants and filler statements are drawn
independently of the label, so a model has to pick up the pattern itself.

Families:
    bounds_guard      array read with or without an index range check
    loop_clamp        copy loop with or without a capacity bound
    offset_guard      memcpy at an offset with or without a size check
    release_on_error  early return that does or does not free a buffer
    null_branch       pointer dereferenced before or after its NULL check
"""
from __future__ import annotations

import numpy as np

from .data import CodeSample, Dataset, stratified_split

FAMILIES = ("bounds_guard", "loop_clamp", "offset_guard", "release_on_error", "null_branch")

_PIECES = (
    "buf", "len", "idx", "ptr", "cnt", "src", "dst", "data", "node", "item", "size", "pos",
    "val", "tmp", "ctx", "out", "key", "off", "cap", "num", "mem", "blk", "row", "col",
    "slot", "head", "tail", "msg", "hdr", "pkt", "seg", "elem", "base", "lim", "acc", "ref",
)
_VERBS = ("get", "read", "copy", "fill", "load", "store", "parse", "scan", "fetch", "emit",
          "pack", "push", "take", "find", "apply", "check", "build", "merge")
_LOOKUPS = ("lookup", "find_entry", "get_node", "table_get", "resolve")
_SINKS = ("log_value", "trace", "record_stat", "note")


class _Names:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.used: set[str] = set()

    def fresh(self) -> str:
        while True:
            k = 1 if self.rng.random() < 0.9 else 2
            name = "_".join(self.rng.choice(_PIECES, size=k, replace=False))
            if self.rng.random() < 0.1:
                name += str(self.rng.integers(0, 10))
            if name not in self.used:
                self.used.add(name)
                return name

    def counter(self) -> str:
        for name in self.rng.permutation(["i", "j", "k", "n", "ix"]):
            if name not in self.used:
                self.used.add(name)
                return str(name)
        return self.fresh()

    def function(self) -> str:
        return f"{self.rng.choice(_VERBS)}_{self.fresh()}"


def _filler(rng: np.random.Generator, names: _Names) -> list[str]:
    t = names.fresh()
    lines = [f"int {t} = {rng.integers(0, 64)};"]
    for _ in range(rng.integers(0, 2)):
        pick = rng.integers(0, 4)
        c = rng.integers(1, 32)
        if pick == 0:
            lines.append(f"{t} += {c};")
        elif pick == 1:
            lines.append(f"if ({t} > {c}) {t} = {c};")
        elif pick == 2:
            lines.append(f"{t} = {t} * {c % 4 + 2};")
        else:
            lines.append(f"{rng.choice(_SINKS)}({t});")
    return lines


def _bounds_guard(rng, n: _Names, vuln: bool):
    f, a, i, ln = n.function(), n.fresh(), n.fresh(), n.fresh()
    sig = f"int {f}(int *{a}, int {i}, int {ln})"
    guard = [f"if ({i} < 0 || {i} >= {ln})", "    return -1;"] \
        if rng.random() < 0.5 else [f"if ({i} >= {ln})", "    return -1;"]
    core = ([] if vuln else guard) + [f"return {a}[{i}];"]
    return sig, core


def _loop_clamp(rng, n: _Names, vuln: bool):
    f, d, s, ln, cap, k = (n.function(), n.fresh(), n.fresh(), n.fresh(), n.fresh(), n.counter())
    sig = f"void {f}(char *{d}, char *{s}, int {ln}, int {cap})"
    core = []
    cond = f"{k} < {ln}"
    if not vuln:
        if rng.random() < 0.5:
            cond = f"{k} < {ln} && {k} < {cap}"
        else:
            core += [f"if ({ln} > {cap})", f"    {ln} = {cap};"]
    core += [f"for (int {k} = 0; {cond}; {k}++)", f"    {d}[{k}] = {s}[{k}];"]
    return sig, core


def _offset_guard(rng, n: _Names, vuln: bool):
    f, d, s, off, ln, size = (n.function(), n.fresh(), n.fresh(), n.fresh(), n.fresh(), n.fresh())
    sig = f"int {f}(char *{d}, char *{s}, size_t {off}, size_t {ln}, size_t {size})"
    guard = [f"if ({off} + {ln} > {size})", "    return 0;"]
    core = ([] if vuln else guard) + [f"memcpy({d}, {s} + {off}, {ln});", "return 1;"]
    return sig, core


def _release_on_error(rng, n: _Names, vuln: bool):
    f, ln, lim, b = n.function(), n.fresh(), n.fresh(), n.fresh()
    sig = f"int {f}(int {ln}, int {lim})"
    core = [f"char *{b} = malloc({ln});", f"if ({b} == NULL)", "    return -1;",
            f"if ({ln} > {lim}) {{"]
    if not vuln:
        core.append(f"    free({b});")
    core += ["    return -1;", "}", f"free({b});", "return 0;"]
    return sig, core


def _null_branch(rng, n: _Names, vuln: bool):
    f, tbl, v, q = n.function(), n.fresh(), n.fresh(), n.fresh()
    sig = f"int {f}(int *{tbl}, int {v})"
    check = [f"if ({q} == NULL)", "    return 0;"]
    branch = [f"if ({v} > 0)", f"    return *{q} + {v};"]
    core = [f"int *{q} = {rng.choice(_LOOKUPS)}({tbl}, {v});"]
    core += (branch + check) if vuln else (check + branch)
    core.append(f"return *{q};")
    return sig, core


_BUILDERS = {
    "bounds_guard": _bounds_guard,
    "loop_clamp": _loop_clamp,
    "offset_guard": _offset_guard,
    "release_on_error": _release_on_error,
    "null_branch": _null_branch,
}


def render_function(signature: str, body: list[str]) -> str:
    return signature + " {\n" + "".join(f"    {line}\n" for line in body) + "}\n"


def make_function(rng: np.random.Generator, family: str, vulnerable: bool) -> str:
    names = _Names(rng)
    sig, core = _BUILDERS[family](rng, names, vulnerable)
    if rng.random() < 0.6:
        # filler goes after the planted pattern so truncation only ever eats filler
        fill = _filler(rng, names)
        core = core + fill if sig.startswith("void") else core[:-1] + fill + core[-1:]
    return render_function(sig, core)


def generate(seed: int, n: int, vulnerable_ratio: float = 0.3, name: str = "synthetic") -> Dataset:
    """Generate ``n`` functions, exactly ``round(n * ratio)`` of them vulnerable."""
    if n < 10:
        raise ValueError("corpus size must be >= 10")
    if not 0.0 < vulnerable_ratio < 1.0:
        raise ValueError("vulnerable_ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n_vuln = int(round(n * vulnerable_ratio))
    labels = np.zeros(n, dtype=int)
    labels[rng.choice(n, size=n_vuln, replace=False)] = 1
    samples = []
    for i, label in enumerate(labels):
        family = FAMILIES[rng.integers(0, len(FAMILIES))]
        code = make_function(rng, family, bool(label))
        samples.append(CodeSample(f"{name}-{i:05d}", code, int(label)))
    return Dataset(name, *stratified_split(samples, seed))
