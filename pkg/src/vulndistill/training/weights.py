"""Loss weights for the composite student objective."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

ABLATIONS = ("wAB", "w/oA", "w/oB", "w/oAB")
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class DistillationWeights:
    gamma: float
    delta: float
    eta: float
    T: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "delta", "eta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        total = self.gamma + self.delta + self.eta
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T}")

    @classmethod
    def from_kappa(cls, gamma: float, kappa: float, T: float = 1.0) -> DistillationWeights:
        """delta = (1 - gamma) * kappa and eta = 1 - (gamma + delta)."""
        delta = (1.0 - gamma) * kappa
        return cls(gamma, delta, 1.0 - (gamma + delta), T)

    def ablate(self, ablation: str) -> DistillationWeights:
        if ablation == "wAB":
            return self
        if ablation == "w/oAB":
            return DistillationWeights(1.0, 0.0, 0.0, self.T)
        if ablation == "w/oA":
            rest = self.gamma + self.eta
            return DistillationWeights(self.gamma / rest, 0.0, 1.0 - self.gamma / rest, self.T)
        if ablation == "w/oB":
            rest = self.gamma + self.delta
            return DistillationWeights(self.gamma / rest, 1.0 - self.gamma / rest, 0.0, self.T)
        raise ValueError(f"unknown ablation {ablation!r}; expected one of {', '.join(ABLATIONS)}")

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "delta": self.delta, "eta": self.eta, "T": self.T}


def hyper_grid(T: float = 1.0) -> list[DistillationWeights]:
    values = (0.3, 0.5, 0.7)
    return [DistillationWeights.from_kappa(g, k, T) for g, k in product(values, values)]
