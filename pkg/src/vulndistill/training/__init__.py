"""Teacher training, student distillation, checkpoints and prediction."""
from .checkpoint import (
    MAGIC, VERSION, Checkpoint, CheckpointError, from_bytes, load_checkpoint, save_checkpoint,
    to_bytes,
)
from .features import STRUCTURE_MODES, Prepared, SplitFeatures, code_text, prepare, structure_text
from .trainer import (
    TrainConfig, VocabMismatch, batched_logits, evaluate_split, fit, labels_from_logits, predict,
    student_loss, train_student, train_teacher_a, train_teacher_b,
)
from .store import load_manifest, load_prepared, save_prepared
from .weights import ABLATIONS, DistillationWeights, hyper_grid

__all__ = [
    "ABLATIONS", "MAGIC", "STRUCTURE_MODES", "VERSION", "Checkpoint", "CheckpointError",
    "DistillationWeights", "Prepared", "SplitFeatures", "TrainConfig", "VocabMismatch",
    "batched_logits", "code_text", "evaluate_split", "fit", "from_bytes", "hyper_grid",
    "labels_from_logits", "load_checkpoint", "load_manifest", "load_prepared", "predict",
    "prepare", "save_checkpoint", "save_prepared", "structure_text", "student_loss", "to_bytes", "train_student", "train_teacher_a",
    "train_teacher_b",
]
