import numpy as np
import pytest

from vulndistill.corpusgen import generate
from vulndistill.data import CodeSample, Dataset
from vulndistill.models import Model, SeqBatch, StudentConfig, TeacherAConfig, TeacherBConfig
from vulndistill.numerics import AdamState, Tensor, adam_step, backward, ops, zero_grad
from vulndistill.training import (
    Checkpoint, CheckpointError, DistillationWeights, TrainConfig, VocabMismatch, evaluate_split,
    from_bytes, hyper_grid, load_checkpoint, predict, prepare, save_checkpoint, student_loss,
    to_bytes, train_student, train_teacher_a, train_teacher_b,
)
from vulndistill.training.trainer import fit, seq_batch

TINY_A = dict(embed_dim=8, filters_per_width=4)
TINY_B = dict(embed_dim=8, hidden_dim=8)
TINY_S = dict(embed_dim=16, heads=2, layers=1, ffn_dim=16)


@pytest.fixture(scope="module")
def prep():
    return prepare(generate(0, 120), vocab_size=300, seq_len=48)


def tiny_a(prep):
    return TeacherAConfig(vocab_size=len(prep.code_vocab), **TINY_A)


def tiny_b(prep):
    return TeacherBConfig(vocab_size=len(prep.struct_vocab), window=prep.window, **TINY_B)


def tiny_s(prep):
    return StudentConfig(vocab_size=len(prep.code_vocab), seq_len=prep.seq_len, **TINY_S)


@pytest.fixture(scope="module")
def teachers(prep):
    cfg = TrainConfig(epochs=2, batch_size=16, seed=0)
    return (train_teacher_a(prep, cfg, tiny_a(prep)), train_teacher_b(prep, cfg, tiny_b(prep)))


# -- weights ---------------------------------------------------------------------------

def test_hyper_grid():
    grid = hyper_grid()
    assert len(grid) == 9
    for w in grid:
        assert abs(w.gamma + w.delta + w.eta - 1.0) <= 1e-12
        assert w.T == 1.0
    lookup = {(round(w.gamma, 10), round(w.delta, 10)): w for w in grid}
    w = lookup[(0.3, 0.49)]
    assert w.eta == pytest.approx(0.21, abs=1e-12)
    w = lookup[(0.7, 0.09)]
    assert w.eta == pytest.approx(0.21, abs=1e-12)


def test_weights_validation():
    with pytest.raises(ValueError):
        DistillationWeights(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        DistillationWeights(1.0, 0.0, 0.0, T=0.0)
    with pytest.raises(ValueError):
        DistillationWeights(1.2, -0.2, 0.0)


def test_ablations():
    w = DistillationWeights(0.5, 0.3, 0.2)
    assert w.ablate("w/oAB") == DistillationWeights(1.0, 0.0, 0.0)
    a = w.ablate("w/oA")
    assert a.delta == 0 and a.gamma == pytest.approx(0.5 / 0.7) and a.eta == pytest.approx(0.2 / 0.7)
    b = w.ablate("w/oB")
    assert b.eta == 0 and b.gamma == pytest.approx(0.5 / 0.8)
    assert w.ablate("wAB") is w
    with pytest.raises(ValueError):
        w.ablate("nope")


# -- loss ------------------------------------------------------------------------------

def _np_softmax(z, T=1.0):
    z = np.asarray(z, dtype=float) / T
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _np_ce(p, y):
    return -np.mean(np.log(np.maximum(p[np.arange(len(y)), y], 1e-12)))


def _np_kl(student, teacher):
    return np.mean(np.sum(teacher * (np.log(np.maximum(teacher, 1e-12))
                                     - np.log(np.maximum(student, 1e-12))), axis=-1))


def test_loss_reduces_to_ce():
    rng = np.random.default_rng(0)
    s = [Tensor(rng.normal(size=(6, 2)), requires_grad=True) for _ in range(3)]
    y = rng.integers(0, 2, 6)
    loss = student_loss(*s, None, None, y, DistillationWeights(1.0, 0.0, 0.0))
    ce = ops.cross_entropy(ops.softmax_t(s[0], 1.0), y)
    assert abs(loss.item() - ce.item()) <= 1e-12


def test_kl_identity_case():
    rng = np.random.default_rng(1)
    cls, dia, dib = (rng.normal(size=(5, 2)) for _ in range(3))
    y = rng.integers(0, 2, 5)
    w = DistillationWeights(0.4, 0.3, 0.3)
    loss = student_loss(Tensor(cls), Tensor(dia), Tensor(dib), dia.copy(), dib.copy(), y, w)
    assert abs(loss.item() - 0.4 * _np_ce(_np_softmax(cls), y)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_loss_matches_independent_composition(seed):
    rng = np.random.default_rng(seed)
    cls, dia, dib, ta, tb = (rng.normal(scale=2, size=(8, 2)) for _ in range(5))
    y = rng.integers(0, 2, 8)
    w = DistillationWeights(0.5, 0.25, 0.25)
    loss = student_loss(Tensor(cls), Tensor(dia), Tensor(dib), ta, tb, y, w).item()
    expect = (0.5 * _np_ce(_np_softmax(cls), y) + 0.25 * _np_kl(_np_softmax(dia), _np_softmax(ta))
              + 0.25 * _np_kl(_np_softmax(dib), _np_softmax(tb)))
    assert abs(loss - expect) <= 1e-12


def test_zero_delta_ignores_teacher_a():
    rng = np.random.default_rng(2)
    s = [Tensor(rng.normal(size=(4, 2)), requires_grad=True) for _ in range(3)]
    y = rng.integers(0, 2, 4)
    tb = rng.normal(size=(4, 2))
    w = DistillationWeights(0.6, 0.0, 0.4)
    grads = []
    for ta in (None, rng.normal(size=(4, 2)), np.full((4, 2), 1e6)):
        for t in s:
            t.grad = None
        backward(student_loss(*s, ta, tb, y, w))
        grads.append([t.grad.copy() for t in s if t.grad is not None])
    for g in grads[1:]:
        for a, b in zip(grads[0], g):
            np.testing.assert_array_equal(a, b)


def test_no_gradient_reaches_teacher_logits():
    rng = np.random.default_rng(3)
    s = [Tensor(rng.normal(size=(4, 2)), requires_grad=True) for _ in range(3)]
    ta = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    tb = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    backward(student_loss(*s, ta, tb, rng.integers(0, 2, 4), DistillationWeights(0.5, 0.25, 0.25)))
    assert ta.grad is None and tb.grad is None
    assert all(t.grad is not None for t in s)


def test_temperature_changes_kl_only():
    rng = np.random.default_rng(4)
    cls, dia, dib, ta, tb = (rng.normal(size=(3, 2)) for _ in range(5))
    y = rng.integers(0, 2, 3)
    w1 = DistillationWeights(1.0, 0.0, 0.0, T=1.0)
    w5 = DistillationWeights(1.0, 0.0, 0.0, T=5.0)
    a = student_loss(Tensor(cls), Tensor(dia), Tensor(dib), ta, tb, y, w1).item()
    b = student_loss(Tensor(cls), Tensor(dia), Tensor(dib), ta, tb, y, w5).item()
    assert a == b


# -- checkpoints -----------------------------------------------------------------------

@pytest.mark.parametrize("kind,cfg", [
    ("teacher_a", TeacherAConfig(vocab_size=20, **TINY_A)),
    ("teacher_b", TeacherBConfig(vocab_size=20, embed_dim=6, hidden_dim=8)),
    ("student", StudentConfig(vocab_size=20, seq_len=16, **TINY_S)),
])
def test_checkpoint_round_trip(tmp_path, kind, cfg):
    ck = Checkpoint.from_model(Model.create(kind, cfg, 3), "abcd", {"val": {"f1": 0.5}}, {"seed": 3})
    path = tmp_path / "m.ckpt"
    save_checkpoint(ck, path)
    raw = path.read_bytes()
    assert raw[:8] == b"SAFEckpt" and raw[8] == 1
    back = load_checkpoint(path)
    assert back == ck
    assert to_bytes(back) == raw
    model = back.to_model()
    assert model.kind == kind


def _sample_ckpt():
    return Checkpoint.from_model(Model.create("teacher_a", TeacherAConfig(vocab_size=10, **TINY_A), 0), "h")


def test_checkpoint_rejects_bad_magic():
    raw = bytearray(to_bytes(_sample_ckpt()))
    raw[0:4] = b"NOPE"
    with pytest.raises(CheckpointError, match="magic"):
        from_bytes(bytes(raw))


def test_checkpoint_rejects_version():
    raw = bytearray(to_bytes(_sample_ckpt()))
    raw[8] = 2
    with pytest.raises(CheckpointError, match="version"):
        from_bytes(bytes(raw))


@pytest.mark.parametrize("cut", [5, 30, -1, -8])
def test_checkpoint_rejects_truncation(cut):
    raw = to_bytes(_sample_ckpt())
    with pytest.raises(CheckpointError):
        from_bytes(raw[:cut])


def test_checkpoint_rejects_trailing_bytes():
    with pytest.raises(CheckpointError):
        from_bytes(to_bytes(_sample_ckpt()) + b"\0" * 8)


def test_checkpoint_rejects_name_mismatch():
    ck = _sample_ckpt()
    ck.params["teacher_a.extra"] = np.zeros(2)
    with pytest.raises(CheckpointError, match="names"):
        from_bytes(to_bytes(ck))
    ck = _sample_ckpt()
    del ck.params["teacher_a.out.b"]
    with pytest.raises(CheckpointError, match="names"):
        from_bytes(to_bytes(ck))


def test_checkpoint_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "none.ckpt")


# -- phase 1 ---------------------------------------------------------------------------

def _two_sample_prep():
    safe = CodeSample("a", "int f(int a) { return a; }", 0)
    bad = CodeSample("b", "int g(char *p) { free(p); free(p); }", 1)
    return prepare(Dataset("toy", [safe, bad], [safe, bad], [safe, bad]), vocab_size=60, seq_len=24)


def test_teacher_a_step_reduces_loss():
    p = _two_sample_prep()
    cfg = TrainConfig(epochs=1, batch_size=2, learning_rate=1e-2, seed=0)
    model = Model.create("teacher_a", TeacherAConfig(vocab_size=len(p.code_vocab), embed_dim=8,
                                                      filters_per_width=4, dropout_rate=0.0), 0)
    train = p.split("train")

    def loss():
        out = model.forward(seq_batch(train, [0, 1]))
        return ops.cross_entropy(ops.softmax_t(out, 1.0), train.labels)

    before = loss().item()
    fit(model, 2, train.labels, lambda idx, rng: loss(), lambda: evaluate_split(model, p, "val"), cfg)
    assert loss().item() < before


def test_teacher_b_step_reduces_loss():
    p = _two_sample_prep()
    cfg = TrainConfig(epochs=1, batch_size=2, learning_rate=1e-2, seed=0)
    ck = train_teacher_b(p, cfg, TeacherBConfig(vocab_size=len(p.struct_vocab), **TINY_B))
    assert ck.metrics["history"][0]["train_loss"] > 0
    model = Model.create("teacher_b", TeacherBConfig(vocab_size=len(p.struct_vocab), **TINY_B), 0)
    from vulndistill.training.trainer import graph_batch
    train = p.split("train")

    def loss():
        out = model.forward(graph_batch(train, [0, 1]))
        return ops.cross_entropy(ops.softmax_t(out, 1.0), train.labels)

    before = loss().item()
    fit(model, 2, train.labels, lambda idx, rng: loss(), lambda: evaluate_split(model, p, "val"), cfg)
    assert loss().item() < before


def test_teacher_training_deterministic(prep):
    cfg = TrainConfig(epochs=2, batch_size=16, seed=5)
    a = train_teacher_a(prep, cfg, tiny_a(prep))
    b = train_teacher_a(prep, cfg, tiny_a(prep))
    assert to_bytes(a) == to_bytes(b)
    c = train_teacher_b(prep, cfg, tiny_b(prep))
    d = train_teacher_b(prep, cfg, tiny_b(prep))
    assert to_bytes(c) == to_bytes(d)


def test_teacher_a_learns_planted_patterns():
    p = prepare(generate(1, 600), vocab_size=800, seq_len=64)
    ck = train_teacher_a(p, TrainConfig(epochs=10, batch_size=32, seed=0, learning_rate=3e-3))
    assert ck.metrics["val"]["f1"] >= 0.8


def test_teacher_b_learns_planted_patterns():
    p = prepare(generate(1, 600), vocab_size=800, seq_len=64)
    ck = train_teacher_b(p, TrainConfig(epochs=10, batch_size=32, seed=0, learning_rate=3e-3))
    assert ck.metrics["val"]["f1"] >= 0.8


def test_teacher_b_dfg_mode_and_empty_body():
    ds = generate(2, 60)
    ds.train.append(CodeSample("empty", "void f() { }", 0))
    ds.train.append(CodeSample("nothing", "", 1))
    p = prepare(ds, vocab_size=300, seq_len=32, structure_mode="dfg")
    ck = train_teacher_b(p, TrainConfig(epochs=1, batch_size=8), tiny_b(p))
    assert ck.kind == "teacher_b"
    assert p.split("train").graphs[-1].num_nodes == 0


def test_single_class_warns():
    s = [CodeSample(str(i), "int f(int a) { return a; }", 0) for i in range(4)]
    p = prepare(Dataset("one", s, s, s), vocab_size=40, seq_len=16)
    with pytest.warns(RuntimeWarning, match="single class"):
        train_teacher_a(p, TrainConfig(epochs=1, batch_size=2), TeacherAConfig(vocab_size=len(p.code_vocab), **TINY_A))


def test_model_selection_prefers_f1_then_recall_then_earlier():
    from vulndistill.evaluation import MetricsReport
    model = Model.create("teacher_a", TeacherAConfig(vocab_size=10, **TINY_A), 0)
    p = model.parameters()[0]
    reports = iter([MetricsReport(0, 0, 0, 0, 0.9, 0.5, 0.6), MetricsReport(0, 0, 0, 0, 0.6, 0.6, 0.6),
                    MetricsReport(0, 0, 0, 0, 0.6, 0.6, 0.6), MetricsReport(0, 0, 0, 0, 1, 0.1, 0.2)])

    def loss_fn(idx, rng):
        return ops.sum(ops.mul(p, p))

    _, metrics = fit(model, 4, np.array([0, 1, 0, 1]), loss_fn, lambda: next(reports),
                     TrainConfig(epochs=4, batch_size=4))
    assert metrics["best_epoch"] == 2


# -- phase 2 ---------------------------------------------------------------------------

def test_without_teachers_matches_ce_only_training(prep):
    cfg = TrainConfig(epochs=2, batch_size=16, learning_rate=2e-3, seed=7, ablation="w/oAB")
    ck = train_student(prep, None, None, DistillationWeights.from_kappa(0.5, 0.5), cfg, tiny_s(prep))

    # independent CE-only loop with the same seeds
    model = Model.create("student", tiny_s(prep), 7)
    params = model.parameters()
    train = prep.split("train")
    shuffle_rng = np.random.default_rng([7, 1])
    drop_rng = np.random.default_rng([7, 2])
    opt = AdamState(lr=2e-3)
    snapshots, losses = [], []
    for _ in range(2):
        order = shuffle_rng.permutation(len(train))
        total = 0.0
        for start in range(0, len(train), 16):
            idx = order[start:start + 16]
            zero_grad(params)
            cls, _, _ = model.forward(SeqBatch.from_sequences([train.seqs[i] for i in idx]),
                                      train=True, rng=drop_rng)
            loss = ops.cross_entropy(ops.softmax_t(cls, 1.0), train.labels[idx])
            backward(loss)
            adam_step(params, opt)
            total += loss.item() * len(idx)
        losses.append(total / len(train))
        snapshots.append({k: v.data.copy() for k, v in model.params.items()})
    assert [h["train_loss"] for h in ck.metrics["history"]] == losses
    best = snapshots[ck.metrics["best_epoch"] - 1]
    for k, v in ck.params.items():
        np.testing.assert_array_equal(v, best[k])


def test_teachers_stay_frozen(prep, teachers):
    ta, tb = teachers
    before = to_bytes(ta), to_bytes(tb)
    train_student(prep, ta, tb, DistillationWeights(0.5, 0.25, 0.25),
                  TrainConfig(epochs=1, batch_size=16, seed=0), tiny_s(prep))
    assert (to_bytes(ta), to_bytes(tb)) == before


def test_student_rejects_wrong_kind_in_teacher_b_slot(prep, teachers):
    ta, _ = teachers
    with pytest.raises(CheckpointError, match="teacher_b"):
        train_student(prep, ta, ta, DistillationWeights(0.5, 0.25, 0.25),
                      TrainConfig(epochs=1, seed=0), tiny_s(prep))


def test_student_requires_teacher_for_ablation(prep, teachers):
    ta, _ = teachers
    w = DistillationWeights(0.5, 0.25, 0.25)
    with pytest.raises(ValueError, match="teacher_b"):
        train_student(prep, ta, None, w, TrainConfig(epochs=1, seed=0), tiny_s(prep))
    ck = train_student(prep, ta, None, w, TrainConfig(epochs=1, seed=0, ablation="w/oB"), tiny_s(prep))
    assert ck.provenance["weights"]["eta"] == 0.0


def test_student_vocab_mismatch(prep, teachers):
    other = prepare(generate(9, 60), vocab_size=250, seq_len=48)
    ta, tb = teachers
    with pytest.raises(VocabMismatch):
        train_student(other, ta, tb, DistillationWeights(0.5, 0.25, 0.25),
                      TrainConfig(epochs=1, seed=0),
                      StudentConfig(vocab_size=len(other.code_vocab), seq_len=48, **TINY_S))


def test_evaluate_reproduces_stored_val_f1(prep):
    ck = train_student(prep, None, None, DistillationWeights(1.0, 0.0, 0.0),
                       TrainConfig(epochs=2, batch_size=16, seed=1), tiny_s(prep))
    report = evaluate_split(ck.to_model(), prep, "val")
    assert abs(report.f1 - ck.metrics["val"]["f1"]) <= 1e-9


# -- prediction ------------------------------------------------------------------------

def _student_with_cls_bias(prep, bias):
    model = Model.create("student", tiny_s(prep), 0)
    model.params["student.head.cls.w"].data[:] = 0
    model.params["student.head.cls.b"].data[:] = bias
    return Checkpoint.from_model(model, prep.code_vocab.digest())


def test_predict_argmax_and_tie(prep):
    label, probs = predict(_student_with_cls_bias(prep, [2.0, -1.0]), prep.code_vocab, "int f() { }")
    assert label == 0 and probs[0] > probs[1]
    label, probs = predict(_student_with_cls_bias(prep, [0.5, 0.5]), prep.code_vocab, "int f() { }")
    assert label == 0 and probs == (0.5, 0.5)
    label, _ = predict(_student_with_cls_bias(prep, [-1.0, 3.0]), prep.code_vocab, "int f() { }")
    assert label == 1


def test_predict_ignores_distillation_heads(prep):
    model = Model.create("student", tiny_s(prep), 4)
    code = generate(0, 10).train[0].code
    base = predict(model, prep.code_vocab, code)
    rng = np.random.default_rng(0)
    for _ in range(10):
        for head in ("dia", "dib"):
            model.params[f"student.head.{head}.w"].data += rng.normal(size=(16, 2))
            model.params[f"student.head.{head}.b"].data += rng.normal(size=2)
        assert predict(model, prep.code_vocab, code) == base


def test_predict_rejects_teacher(prep, teachers):
    with pytest.raises(CheckpointError):
        predict(teachers[0], prep.code_vocab, "int f() { }")
