"""Central finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(diff / scale)


def numeric_grad(f: Callable[[], Tensor], x: Tensor, step: float = 1e-5) -> np.ndarray:
    out = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    gflat = out.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f().item()
        flat[i] = orig - step
        lo = f().item()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return out


def check_gradients(f: Callable[[], Tensor], inputs: Sequence[Tensor],
                    step: float = 1e-5) -> dict[int, float]:
    """Compare analytic and numeric gradients of scalar ``f()`` for each input.

    Returns the relative error per input index.
    """
    for x in inputs:
        x.grad = None
    backward(f())
    errors = {}
    for i, x in enumerate(inputs):
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
        errors[i] = relative_error(analytic, numeric_grad(f, x, step))
    return errors
