"""Command-line entry point.

Settings resolve as: command-line flags, then the JSON config file given by
``--config`` (flat dotted keys such as ``student.layers``), then the
``SAFE_SEED`` environment variable for the seed, then built-in defaults.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .corpusgen import generate
from .data import SPLITS, DataError, load_dataset, read_jsonl, save_dataset
from .evaluation import FORMATS, MetricsReport, compute_metrics, emit_report, emit_table, write_predictions
from .models import StudentConfig, TeacherAConfig, TeacherBConfig
from .training import (
    ABLATIONS, STRUCTURE_MODES, CheckpointError, DistillationWeights, TrainConfig, VocabMismatch,
    evaluate_split, hyper_grid, load_checkpoint, predict, prepare, save_checkpoint, train_student,
    train_teacher_a, train_teacher_b,
)
from .training.store import load_manifest, load_prepared, save_prepared

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "corpus.n": 2000,
    "corpus.ratio": 0.3,
    "prepare.vocab_size": 4096,
    "prepare.seq_len": 512,
    "prepare.structure": "ast",
    "prepare.window": 5,
    "train.epochs": 10,
    "train.batch_size": 32,
    "train.lr_teacher": 3e-3,
    "train.lr_student": 1e-3,
    "distill.ablation": "wAB",
    "distill.gamma": 0.5,
    "distill.kappa": 0.5,
    "distill.temperature": 1.0,
    "teacher_a.embed_dim": 64,
    "teacher_a.filter_widths": [3, 4, 5],
    "teacher_a.filters_per_width": 32,
    "teacher_a.dropout_rate": 0.5,
    "teacher_b.embed_dim": 64,
    "teacher_b.hidden_dim": 64,
    "teacher_b.gnn_layers": 2,
    "student.embed_dim": 64,
    "student.layers": 4,
    "student.heads": 4,
    "student.ffn_dim": 128,
    "student.dropout_rate": 0.1,
}

# flag dest -> config key
FLAG_KEYS = {
    "seed": "seed", "n": "corpus.n", "ratio": "corpus.ratio", "vocab_size": "prepare.vocab_size",
    "seq_len": "prepare.seq_len", "structure": "prepare.structure", "epochs": "train.epochs",
    "batch_size": "train.batch_size", "ablation": "distill.ablation", "gamma": "distill.gamma",
    "kappa": "distill.kappa", "temperature": "distill.temperature",
}


class UsageError(Exception):
    pass


def resolve_config(args: argparse.Namespace, lr_key: str | None = None) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config} is not valid JSON: {exc.msg}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object with dotted keys")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in loaded.items():
            want = type(DEFAULTS[key])
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, want) or isinstance(value, bool):
                raise UsageError(f"config key {key} expects {want.__name__}, got {value!r}")
            cfg[key] = value
    else:
        loaded = {}
    if "seed" not in loaded and os.environ.get("SAFE_SEED"):
        try:
            cfg["seed"] = int(os.environ["SAFE_SEED"])
        except ValueError:
            raise UsageError(f"SAFE_SEED must be an integer, got {os.environ['SAFE_SEED']!r}") from None
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            cfg[key] = value
    if lr_key and getattr(args, "lr", None) is not None:
        cfg[lr_key] = args.lr
    return cfg


def _section(cfg: dict, prefix: str) -> dict:
    return {k[len(prefix) + 1:]: v for k, v in cfg.items() if k.startswith(prefix + ".")}


def _train_config(cfg: dict, lr_key: str, ablation: str = "wAB", structure: str = "ast") -> TrainConfig:
    return TrainConfig(epochs=cfg["train.epochs"], batch_size=cfg["train.batch_size"],
                       learning_rate=cfg[lr_key], seed=cfg["seed"], ablation=ablation,
                       structure_mode=structure)


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _need(value, flag: str, why: str):
    if value is None:
        raise UsageError(f"{flag} is required {why}")
    return value


# -- commands --------------------------------------------------------------------------

def cmd_gen_corpus(args) -> int:
    cfg = resolve_config(args)
    out = Path(_need(args.out, "--out", "for gen-corpus"))
    ds = generate(cfg["seed"], cfg["corpus.n"], cfg["corpus.ratio"])
    save_dataset(ds, out)
    print(f"wrote {len(ds.train)}/{len(ds.val)}/{len(ds.test)} samples to {out}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    cfg = resolve_config(args)
    data = _need(args.data, "--data", "(JSONL file or directory of split files)")
    out = Path(_need(args.out, "--out", "for prepare"))
    ds = load_dataset(data, seed=cfg["seed"])
    prep = prepare(ds, cfg["prepare.vocab_size"], cfg["prepare.seq_len"], cfg["prepare.structure"],
                   cfg["prepare.window"])
    run = {k: v for k, v in cfg.items() if k == "seed" or k.startswith("prepare.")}
    save_prepared(prep, ds, out, run)
    print(f"prepared {ds.name}: code vocab {len(prep.code_vocab)}, structure vocab "
          f"{len(prep.struct_vocab)} ({prep.structure_mode}) -> {out}")
    return EXIT_OK


def _train_teacher(args, kind: str) -> int:
    cfg = resolve_config(args, "train.lr_teacher")
    data = _need(args.data, "--data", "(prepared directory)")
    out = Path(_need(args.out, "--out", "(checkpoint path)"))
    prep = load_prepared(data, splits=("train", "val"))
    tcfg = _train_config(cfg, "train.lr_teacher", structure=prep.structure_mode)
    run = {"command": f"train-{kind.replace('_', '-')}", **cfg}
    if kind == "teacher_a":
        mcfg = TeacherAConfig(vocab_size=len(prep.code_vocab), **_section(cfg, "teacher_a"))
        ck = train_teacher_a(prep, tcfg, mcfg, log=print, extra={"run_config": run})
    else:
        mcfg = TeacherBConfig(vocab_size=len(prep.struct_vocab), window=prep.window,
                              **_section(cfg, "teacher_b"))
        ck = train_teacher_b(prep, tcfg, mcfg, log=print, extra={"run_config": run})
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ck, out)
    print(f"best epoch {ck.metrics['best_epoch']} val F1 {ck.metrics['val']['f1']:.4f} -> {out}")
    return EXIT_OK


def cmd_train_teacher_a(args) -> int:
    return _train_teacher(args, "teacher_a")


def cmd_train_teacher_b(args) -> int:
    return _train_teacher(args, "teacher_b")


def cmd_train_student(args) -> int:
    cfg = resolve_config(args, "train.lr_student")
    data = _need(args.data, "--data", "(prepared directory)")
    out = Path(_need(args.out, "--out", "(checkpoint path, or directory with --grid)"))
    ablation = cfg["distill.ablation"]
    if ablation not in ABLATIONS:
        raise UsageError(f"unknown ablation {ablation!r}")
    needs_a = ablation in ("wAB", "w/oB")
    needs_b = ablation in ("wAB", "w/oA")
    if needs_a:
        _need(args.teacher_a, "--teacher-a", f"for ablation {ablation}")
    if needs_b:
        _need(args.teacher_b, "--teacher-b", f"for ablation {ablation}")
    t_a = load_checkpoint(args.teacher_a, "teacher_a") if needs_a else None
    t_b = load_checkpoint(args.teacher_b, "teacher_b") if needs_b else None
    prep = load_prepared(data, splits=("train", "val"))
    tcfg = _train_config(cfg, "train.lr_student", ablation, prep.structure_mode)
    mcfg = StudentConfig(vocab_size=len(prep.code_vocab), seq_len=prep.seq_len, **_section(cfg, "student"))
    run = {"command": "train-student", **cfg,
           "teacher_a_digest": _file_digest(args.teacher_a) if needs_a else None,
           "teacher_b_digest": _file_digest(args.teacher_b) if needs_b else None}
    T = cfg["distill.temperature"]
    if not args.grid:
        w = DistillationWeights.from_kappa(cfg["distill.gamma"], cfg["distill.kappa"], T)
        ck = train_student(prep, t_a, t_b, w, tcfg, mcfg, log=print, extra={"run_config": run})
        out.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(ck, out)
        print(f"best epoch {ck.metrics['best_epoch']} val F1 {ck.metrics['val']['f1']:.4f} -> {out}")
        return EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    rows, reports = [], []
    for i, w in enumerate(hyper_grid(T)):
        print(f"grid point {i}: gamma {w.gamma:g} delta {w.delta:g} eta {w.eta:g}")
        ck = train_student(prep, t_a, t_b, w, tcfg, mcfg, log=print,
                           extra={"run_config": run, "grid_index": i})
        save_checkpoint(ck, out / f"grid_{i}.ckpt")
        v = ck.metrics["val"]
        rows.append({"index": i, **w.ablate(ablation).as_dict(), "best_epoch": ck.metrics["best_epoch"],
                     "val_recall": v["recall"], "val_precision": v["precision"], "val_f1": v["f1"]})
        reports.append(MetricsReport(v["tp"], v["fp"], v["fn"], v["tn"], v["precision"], v["recall"],
                                     v["f1"], prep.name, "val",
                                     f"grid {i} (g={w.gamma:g}, d={w.delta:g}, e={w.eta:g})"))
    (out / "grid_report.json").write_text(json.dumps({"run_config": run, "points": rows}, indent=1,
                                                     sort_keys=True) + "\n", encoding="utf-8")
    (out / "grid_report.md").write_text(emit_table(reports), encoding="utf-8")
    print(emit_table(reports), end="")
    return EXIT_OK


def _vocab_for(prep, kind: str):
    return prep.struct_vocab if kind == "teacher_b" else prep.code_vocab


def cmd_evaluate(args) -> int:
    if args.split not in SPLITS:
        raise DataError(f"unknown split {args.split!r}; valid splits: {', '.join(SPLITS)}")
    ck = load_checkpoint(args.checkpoint)
    data = _need(args.data, "--data", "(prepared directory)")
    prep = load_prepared(data, splits=(args.split,))
    if ck.vocab_hash != _vocab_for(prep, ck.kind).digest():
        raise VocabMismatch(f"checkpoint vocab {ck.vocab_hash} does not match prepared data "
                            f"vocab {_vocab_for(prep, ck.kind).digest()}")
    report = evaluate_split(ck.to_model(), prep, args.split, model_id=args.model_id or ck.kind)
    out = Path(args.out or "reports")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{report.model}_{args.split}".replace("/", "-")
    formats = [args.format] if args.format else list(FORMATS)
    run = {"command": "evaluate", "split": args.split, "checkpoint_digest": _file_digest(args.checkpoint),
           "checkpoint_provenance": ck.provenance}
    for fmt in formats:
        text = emit_report(report, fmt)
        if fmt == "json":
            text = json.dumps({**report.summary(), "run_config": run}, indent=2, sort_keys=True) + "\n"
        (out / f"{stem}.{fmt}").write_text(text, encoding="utf-8")
    write_predictions(report.predictions, out / f"{stem}.predictions.jsonl")
    print(emit_report(report, "md"), end="")
    return EXIT_OK


def cmd_predict(args) -> int:
    ck = load_checkpoint(args.checkpoint, "student")
    data = _need(args.data, "--data", "(prepared directory holding the vocabulary)")
    manifest = load_manifest(data)
    from .tokenizer import Vocab
    vocab = Vocab.load(Path(data) / "code_vocab.json")
    source = args.source
    if source.endswith(".jsonl"):
        for s in read_jsonl(source):
            label, probs = predict(ck, vocab, s.code, manifest["seq_len"])
            print(json.dumps({"id": s.id, "label": s.label, "pred": label, "p_vulnerable": probs[1]}))
        return EXIT_OK
    code = sys.stdin.read() if source == "-" else Path(source).read_text(encoding="utf-8")
    label, probs = predict(ck, vocab, code, manifest["seq_len"])
    print(json.dumps({"pred": label, "p_safe": probs[0], "p_vulnerable": probs[1]}))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vulndistill", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, out=True):
        p.add_argument("--config", help="JSON file with flat dotted keys")
        p.add_argument("--seed", type=int)
        if data:
            p.add_argument("--data")
        if out:
            p.add_argument("--out")

    def training(p):
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--lr", type=float)

    p = sub.add_parser("gen-corpus", help="write a synthetic labelled corpus")
    common(p, data=False)
    p.add_argument("--n", type=int, help="number of functions")
    p.add_argument("--ratio", type=float, help="fraction of vulnerable functions")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("prepare", help="train vocabularies and encode a dataset")
    common(p)
    p.add_argument("--seq-len", type=int)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--structure", choices=STRUCTURE_MODES)
    p.set_defaults(func=cmd_prepare)

    for name, func in (("train-teacher-a", cmd_train_teacher_a), ("train-teacher-b", cmd_train_teacher_b)):
        p = sub.add_parser(name, help=f"train {name[6:].replace('-', ' ')}")
        common(p)
        training(p)
        p.set_defaults(func=func)

    p = sub.add_parser("train-student", help="distill teachers into the student")
    common(p)
    training(p)
    p.add_argument("--teacher-a")
    p.add_argument("--teacher-b")
    p.add_argument("--ablation", choices=ABLATIONS)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--temperature", type=float)
    p.add_argument("--grid", action="store_true", help="train all 9 grid points into --out/")
    p.set_defaults(func=cmd_train_student)

    p = sub.add_parser("evaluate", help="score a checkpoint on a prepared split")
    p.add_argument("checkpoint")
    p.add_argument("split")
    common(p)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--model-id")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify a source file, stdin (-) or a JSONL file")
    p.add_argument("checkpoint")
    p.add_argument("source")
    common(p, out=False)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, VocabMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
