"""Two-phase training: fit both teachers, then distill them into the student."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from ..evaluation import MetricsReport, compute_metrics
from ..models import GraphBatch, Model, SeqBatch, StudentConfig, TeacherAConfig, TeacherBConfig
from ..numerics import AdamState, Tensor, adam_step, backward, no_grad, ops, zero_grad
from ..tokenizer import assemble
from ..data import DataError
from .checkpoint import Checkpoint, CheckpointError
from .features import Prepared, SplitFeatures, code_text
from .weights import ABLATIONS, DistillationWeights

Logger = Callable[[str], None]


class VocabMismatch(ValueError):
    """A checkpoint was trained against a different vocabulary than the data."""


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    ablation: str = "wAB"
    structure_mode: str = "ast"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}; expected one of {', '.join(ABLATIONS)}")


def _quiet(_: str) -> None:
    pass


def _batches(n: int, size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, size):
        yield order[start:start + size]


def _better(report: MetricsReport, best: MetricsReport | None) -> bool:
    # higher F1, then higher recall; ties keep the earlier epoch
    return best is None or (report.f1, report.recall) > (best.f1, best.recall)


def fit(model: Model, n_train: int, labels: np.ndarray, loss_fn, predict_val, cfg: TrainConfig,
        log: Logger = _quiet) -> tuple[dict[str, np.ndarray], dict]:
    """Minibatch Adam over ``loss_fn(idx, rng)``; keep the parameters of the best val epoch.

    Returns (best parameter arrays, metrics dict).
    """
    if len(np.unique(labels)) < 2:
        warnings.warn("training split contains a single class", RuntimeWarning, stacklevel=3)
    params = model.parameters()
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    dropout_rng = np.random.default_rng([cfg.seed, 2])
    opt = AdamState(lr=cfg.learning_rate)
    best, best_params, best_epoch, history = None, None, 0, []
    for epoch in range(1, cfg.epochs + 1):
        total, count = 0.0, 0
        for idx in _batches(n_train, cfg.batch_size, shuffle_rng):
            zero_grad(params)
            loss = loss_fn(idx, dropout_rng)
            backward(loss)
            adam_step(params, opt)
            total += loss.item() * len(idx)
            count += len(idx)
        report = predict_val()
        history.append({"epoch": epoch, "train_loss": total / count, "val_f1": report.f1,
                        "val_precision": report.precision, "val_recall": report.recall})
        log(f"epoch {epoch:3d}  train_loss {total / count:.6f}  val P {report.precision:.4f} "
            f"R {report.recall:.4f} F1 {report.f1:.4f}")
        if _better(report, best):
            best, best_epoch = report, epoch
            best_params = {k: p.data.copy() for k, p in model.params.items()}
    for k, p in model.params.items():
        p.data = best_params[k].copy()
    metrics = {"best_epoch": best_epoch, "val": best.summary(), "history": history}
    return best_params, metrics


# -- batching helpers ------------------------------------------------------------------

def seq_batch(split: SplitFeatures, idx) -> SeqBatch:
    return SeqBatch.from_sequences([split.seqs[i] for i in idx])


def graph_batch(split: SplitFeatures, idx) -> GraphBatch:
    return GraphBatch.from_graphs([split.graphs[i] for i in idx])


def batched_logits(model: Model, split: SplitFeatures, batch_size: int = 128) -> np.ndarray:
    """Eval-mode logits for a whole split; the student returns its cls head."""
    make = graph_batch if model.kind == "teacher_b" else seq_batch
    out = []
    with no_grad():
        for start in range(0, len(split), batch_size):
            idx = range(start, min(start + batch_size, len(split)))
            logits = model.forward(make(split, idx))
            out.append((logits[0] if isinstance(logits, tuple) else logits).data)
    return np.concatenate(out) if out else np.zeros((0, 2))


def labels_from_logits(logits: np.ndarray) -> np.ndarray:
    # exact ties resolve to the non-vulnerable label
    return (logits[:, 1] > logits[:, 0]).astype(np.int64)


def evaluate_split(model: Model, prep: Prepared, split: str, model_id: str = "") -> MetricsReport:
    feats = prep.split(split)
    logits = batched_logits(model, feats)
    preds = labels_from_logits(logits)
    report = compute_metrics(preds.tolist(), feats.labels.tolist(), prep.name, split,
                             model_id or model.kind)
    probs = ops.softmax_t(logits, 1.0).data if len(logits) else logits
    report.predictions = [{"id": i, "label": int(y), "pred": int(p), "p_vulnerable": float(pv)}
                          for i, y, p, pv in zip(feats.ids, feats.labels, preds, probs[:, 1])]
    return report


def _provenance(cfg: TrainConfig, prep: Prepared, extra: dict | None = None) -> dict:
    out = {"train": asdict(cfg), "seq_len": prep.seq_len, "structure_mode": prep.structure_mode,
           "window": prep.window, "dataset": prep.name}
    out.update(extra or {})
    return out


def _check_splits(prep: Prepared) -> None:
    for name in ("train", "val"):
        if len(prep.split(name)) == 0:
            raise DataError(f"{name} split is empty")


# -- phase 1 ---------------------------------------------------------------------------

def _fit_classifier(model: Model, prep: Prepared, cfg: TrainConfig, vocab_hash: str,
                    log: Logger, extra: dict | None) -> Checkpoint:
    _check_splits(prep)
    train = prep.split("train")
    make = graph_batch if model.kind == "teacher_b" else seq_batch

    def loss_fn(idx, rng):
        logits = model.forward(make(train, idx), train=True, rng=rng)
        return ops.cross_entropy(ops.softmax_t(logits, 1.0), train.labels[idx])

    _, metrics = fit(model, len(train), train.labels, loss_fn,
                     lambda: evaluate_split(model, prep, "val"), cfg, log)
    return Checkpoint.from_model(model, vocab_hash, metrics, _provenance(cfg, prep, extra))


def train_teacher_a(prep: Prepared, cfg: TrainConfig, model_cfg: TeacherAConfig | None = None,
                    log: Logger = _quiet, extra: dict | None = None) -> Checkpoint:
    model_cfg = model_cfg or TeacherAConfig(vocab_size=len(prep.code_vocab))
    model = Model.create("teacher_a", model_cfg, cfg.seed)
    return _fit_classifier(model, prep, cfg, prep.code_vocab.digest(), log, extra)


def train_teacher_b(prep: Prepared, cfg: TrainConfig, model_cfg: TeacherBConfig | None = None,
                    log: Logger = _quiet, extra: dict | None = None) -> Checkpoint:
    model_cfg = model_cfg or TeacherBConfig(vocab_size=len(prep.struct_vocab), window=prep.window)
    if model_cfg.window != prep.window:
        raise ValueError(f"teacher-B window {model_cfg.window} != prepared window {prep.window}")
    model = Model.create("teacher_b", model_cfg, cfg.seed)
    return _fit_classifier(model, prep, cfg, prep.struct_vocab.digest(), log, extra)


# -- phase 2 ---------------------------------------------------------------------------

def student_loss(s_cls: Tensor, s_dia: Tensor, s_dib: Tensor, t_a, t_b, y,
                 w: DistillationWeights) -> Tensor:
    """gamma*CE(cls) + delta*KL(dia vs teacher A) + eta*KL(dib vs teacher B).

    Teacher logits are plain arrays (no gradient). Terms with zero weight are
    skipped entirely, so their teacher inputs may be None.
    """
    if abs(w.gamma + w.delta + w.eta - 1.0) > 1e-12:
        raise ValueError("distillation weights must sum to 1")
    terms = []
    if w.gamma:
        terms.append(ops.mul(ops.cross_entropy(ops.softmax_t(s_cls, 1.0), y), w.gamma))
    for weight, student, teacher in ((w.delta, s_dia, t_a), (w.eta, s_dib, t_b)):
        if weight:
            target = ops.softmax_t(np.asarray(teacher.data if isinstance(teacher, Tensor) else teacher),
                                   w.T).data
            terms.append(ops.mul(ops.kl_div(ops.softmax_t(student, w.T), target), weight))
    total = terms[0]
    for t in terms[1:]:
        total = ops.add(total, t)
    return total


def _teacher_logits(ck: Checkpoint | None, kind: str, vocab_hash: str, split: SplitFeatures):
    if ck is None:
        raise ValueError(f"{kind} checkpoint required for this ablation")
    ck.expect_kind(kind)
    if ck.vocab_hash != vocab_hash:
        raise VocabMismatch(f"{kind} checkpoint vocab {ck.vocab_hash} does not match prepared "
                            f"data vocab {vocab_hash}")
    model = ck.to_model()
    model.freeze()
    return batched_logits(model, split)


def train_student(prep: Prepared, t_a: Checkpoint | None, t_b: Checkpoint | None,
                  weights: DistillationWeights, cfg: TrainConfig,
                  model_cfg: StudentConfig | None = None, log: Logger = _quiet,
                  extra: dict | None = None) -> Checkpoint:
    """Distill frozen teachers into the student.

    Teacher logits for the train split are computed once up front: the
    teachers are frozen and run without dropout, so they never change.
    """
    _check_splits(prep)
    w = weights.ablate(cfg.ablation)
    train = prep.split("train")
    code_hash = prep.code_vocab.digest()
    logits_a = _teacher_logits(t_a, "teacher_a", code_hash, train) if w.delta else None
    logits_b = _teacher_logits(t_b, "teacher_b", prep.struct_vocab.digest(), train) if w.eta else None
    model_cfg = model_cfg or StudentConfig(vocab_size=len(prep.code_vocab), seq_len=prep.seq_len)
    if model_cfg.seq_len != prep.seq_len:
        raise ValueError(f"student seq_len {model_cfg.seq_len} != prepared seq_len {prep.seq_len}")
    model = Model.create("student", model_cfg, cfg.seed)

    def loss_fn(idx, rng):
        s_cls, s_dia, s_dib = model.forward(seq_batch(train, idx), train=True, rng=rng)
        return student_loss(s_cls, s_dia, s_dib,
                            None if logits_a is None else logits_a[idx],
                            None if logits_b is None else logits_b[idx],
                            train.labels[idx], w)

    _, metrics = fit(model, len(train), train.labels, loss_fn,
                     lambda: evaluate_split(model, prep, "val"), cfg, log)
    info = {"weights": w.as_dict()}
    info.update(extra or {})
    return Checkpoint.from_model(model, code_hash, metrics, _provenance(cfg, prep, info))


def predict(student: Checkpoint | Model, vocab, code: str, seq_len: int | None = None
            ) -> tuple[int, tuple[float, float]]:
    """Label and (p_safe, p_vulnerable) from the cls head alone."""
    model = student.to_model() if isinstance(student, Checkpoint) else student
    if model.kind != "student":
        raise CheckpointError(f"expected a student checkpoint, got {model.kind}")
    if isinstance(student, Checkpoint) and student.vocab_hash != vocab.digest():
        raise VocabMismatch("student checkpoint vocab does not match the given vocab")
    seq = assemble(vocab.encode(code_text(code)), seq_len or model.config.seq_len)
    with no_grad():
        cls_logits = model.forward(SeqBatch.from_sequences([seq]))[0].data
    probs = ops.softmax_t(cls_logits, 1.0).data[0]
    return int(labels_from_logits(cls_logits)[0]), (float(probs[0]), float(probs[1]))
