"""The two teachers and the distilled student, plus a uniform model bundle."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..numerics import Parameter
from .common import GraphBatch, ParamBuilder, SeqBatch
from .student import HEADS, StudentConfig, init_student, student_forward
from .teacher_a import TeacherAConfig, init_teacher_a, teacher_a_forward
from .teacher_b import TeacherBConfig, init_teacher_b, teacher_b_forward

KINDS = {
    "teacher_a": (TeacherAConfig, init_teacher_a, teacher_a_forward),
    "teacher_b": (TeacherBConfig, init_teacher_b, teacher_b_forward),
    "student": (StudentConfig, init_student, student_forward),
}


@dataclass
class Model:
    kind: str
    config: Any
    params: dict[str, Parameter]

    @classmethod
    def create(cls, kind: str, config, seed: int) -> Model:
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        return cls(kind, config, KINDS[kind][1](config, seed))

    @classmethod
    def from_config_dict(cls, kind: str, cfg: dict) -> Any:
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        return KINDS[kind][0](**cfg)

    def config_dict(self) -> dict:
        d = asdict(self.config)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def forward(self, batch, train: bool = False, rng: np.random.Generator | None = None):
        return KINDS[self.kind][2](self.config, self.params, batch, train=train, rng=rng)

    def freeze(self) -> None:
        for p in self.params.values():
            p.requires_grad = False


__all__ = [
    "HEADS", "KINDS", "GraphBatch", "Model", "ParamBuilder", "SeqBatch", "StudentConfig",
    "TeacherAConfig", "TeacherBConfig", "init_student", "init_teacher_a", "init_teacher_b",
    "student_forward", "teacher_a_forward", "teacher_b_forward",
]
