"""
Saving, loading and predicting
==============================

Checkpoints are a small binary format: magic bytes, a version byte, a JSON
header (config, parameter table, vocabulary hash, metrics, provenance) and
the raw float64 parameters. Loading checks all of it.
"""

# %%
import tempfile
from pathlib import Path

from vulndistill.corpusgen import generate
from vulndistill.training import (
    CheckpointError, DistillationWeights, TrainConfig, load_checkpoint, predict, prepare,
    save_checkpoint, train_student,
)

ds = generate(seed=2, n=300)
prep = prepare(ds, vocab_size=600)

# %%
# A quick student without teachers, just to have something to save.
cfg = TrainConfig(epochs=3, seed=2, ablation="w/oAB")
ck = train_student(prep, None, None, DistillationWeights(1.0, 0.0, 0.0), cfg)

out = Path(tempfile.mkdtemp()) / "student.ckpt"
save_checkpoint(ck, out)
back = load_checkpoint(out, kind="student")
print(f"saved {out.stat().st_size} bytes; reloaded equal: {back == ck}")
print("best epoch:", back.metrics["best_epoch"], "| val F1:", round(back.metrics["val"]["f1"], 3))

# %%
# Prediction needs the same code vocabulary the student was trained with.
code = """int read_at(int *buf, int n, int i) {
    return buf[i];
}"""
label, (p_safe, p_vuln) = predict(back, prep.code_vocab, code)
print(f"predicted label {label}  (p_vulnerable = {p_vuln:.3f})")

# %%
# Damaged files are refused with a format error rather than loaded.
raw = out.read_bytes()
out.write_bytes(raw[: len(raw) // 2])
try:
    load_checkpoint(out)
except CheckpointError as exc:
    print("truncated file rejected:", exc)
