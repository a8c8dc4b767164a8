from . import ops
from .ops import cross_entropy, kl_div, matmul, softmax_t
from .optim import AdamState, adam_step, zero_grad
from .tensor import Parameter, ShapeError, Tensor, backward, is_grad_enabled, no_grad

__all__ = [
    "AdamState", "Parameter", "ShapeError", "Tensor", "adam_step", "backward",
    "cross_entropy", "is_grad_enabled", "kl_div", "matmul", "no_grad", "ops",
    "softmax_t", "zero_grad",
]
