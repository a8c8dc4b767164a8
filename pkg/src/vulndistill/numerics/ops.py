"""Differentiable kernels.

All kernels take and return :class:`Tensor`; plain arrays and scalars are
promoted to constants. Integer index arguments (ids, positions, masks) are
plain numpy arrays and never carry gradients.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import ShapeError, Tensor, as_tensor, record

LOG_FLOOR = 1e-12


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise -------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return record(a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return record(a.data - b.data, (a, b),
                  lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return record(ad * bd, (a, b),
                  lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return record(y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0
    return record(np.maximum(x.data, 0.0), (x,), lambda g: (g * pos,))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return record(y, (x,), lambda g: (g * y,))


def log(x: Tensor, floor: float = LOG_FLOOR) -> Tensor:
    """Natural log with inputs clamped at ``floor``; clamped entries get zero gradient."""
    clamped = np.maximum(x.data, floor)
    live = x.data >= floor
    return record(np.log(clamped), (x,), lambda g: (np.where(live, g / clamped, 0.0),))


# -- reductions and reshaping --------------------------------------------------

def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    shape = x.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return record(np.sum(x.data, axis=axis, keepdims=keepdims), (x,), bw)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.shape
    return record(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    inv = np.argsort(axes)
    return record(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inv),))


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    bounds = np.cumsum(sizes)[:-1]
    return record(np.concatenate([x.data for x in xs], axis=axis), xs,
                  lambda g: tuple(np.split(g, bounds, axis=axis)))


# -- linear algebra ------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes with numpy batch broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def bw(g):
        ga = g @ np.swapaxes(bd, -1, -2)
        if bd.ndim == 2:
            gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return _unbroadcast(ga, ad.shape), gb

    return record(ad @ bd, (a, b), bw)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    y = matmul(x, w)
    return y if b is None else add(y, b)


# -- neural network kernels ----------------------------------------------------

def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather ``weight[ids]``; the gradient scatter-adds back into rows."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
        raise IndexError(f"embedding id out of range [0, {weight.shape[0]})")
    vocab, dim = weight.shape

    def bw(g):
        out = np.zeros((vocab, dim))
        np.add.at(out, ids.reshape(-1), g.reshape(-1, dim))
        return (out,)

    return record(weight.data[ids], (weight,), bw)


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Valid 1-D convolution over the time axis.

    x: [B, L, C], w: [K, C, F], b: [F] -> [B, L-K+1, F].
    """
    bsz, length, ch = x.shape
    k, wc, nf = w.shape
    if wc != ch:
        raise ShapeError(f"conv1d channel mismatch: input {x.shape}, filter {w.shape}")
    if length < k:
        raise ShapeError(f"conv1d sequence length {length} shorter than width {k}")
    out_len = length - k + 1
    # windows: [B, out_len, K, C]
    idx = np.arange(out_len)[:, None] + np.arange(k)[None, :]
    windows = x.data[:, idx, :]
    flat = windows.reshape(bsz * out_len, k * ch)
    wmat = w.data.reshape(k * ch, nf)
    y = (flat @ wmat).reshape(bsz, out_len, nf) + b.data

    def bw(g):
        g2 = g.reshape(bsz * out_len, nf)
        gw = (flat.T @ g2).reshape(k, ch, nf)
        gb = g2.sum(axis=0)
        gwin = (g2 @ wmat.T).reshape(bsz, out_len, k, ch)
        gx = np.zeros_like(x.data)
        for j in range(k):
            gx[:, j:j + out_len, :] += gwin[:, :, j, :]
        return gx, gw, gb

    return record(y, (x, w, b), bw)


def max_over_time(x: Tensor) -> Tensor:
    """Max over axis 1 of [B, L, F]; ties route the gradient to the first maximum."""
    arg = np.argmax(x.data, axis=1)
    bsz, _, nf = x.shape
    bi, fi = np.meshgrid(np.arange(bsz), np.arange(nf), indexing="ij")

    def bw(g):
        out = np.zeros_like(x.data)
        out[bi, arg, fi] = g
        return (out,)

    return record(x.data[bi, arg, fi], (x,), bw)


def masked_mean(x: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over axis 1 of [B, N, D] counting rows where ``mask`` [B, N] is set.

    Rows with an empty mask yield zeros.
    """
    m = np.asarray(mask, dtype=float)[:, :, None]
    counts = np.maximum(m.sum(axis=1), 1.0)
    y = (x.data * m).sum(axis=1) / counts
    return record(y, (x,), lambda g: (m * (g / counts)[:, None, :],))


def masked_max(x: Tensor, mask: np.ndarray) -> Tensor:
    """Max over axis 1 of [B, N, D] restricted to masked rows; empty masks yield zeros."""
    mask = np.asarray(mask, dtype=bool)
    filled = np.where(mask[:, :, None], x.data, -np.inf)
    arg = np.argmax(filled, axis=1)
    bsz, _, dim = x.shape
    bi, di = np.meshgrid(np.arange(bsz), np.arange(dim), indexing="ij")
    has = mask.any(axis=1)[:, None]
    y = np.where(has, x.data[bi, arg, di], 0.0)

    def bw(g):
        out = np.zeros_like(x.data)
        out[bi, arg, di] = np.where(has, g, 0.0)
        return (out,)

    return record(y, (x,), bw)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gamma.data
    n = x.shape[-1]

    def bw(g):
        gg = _unbroadcast(g * xhat, gamma.shape)
        gbeta = _unbroadcast(g, beta.shape)
        gx_hat = g * gd
        gx = inv * (gx_hat - gx_hat.mean(axis=-1, keepdims=True)
                    - xhat * (gx_hat * xhat).sum(axis=-1, keepdims=True) / n)
        return gx, gg, gbeta

    return record(xhat * gd + beta.data, (x, gamma, beta), bw)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout; identity outside training or when ``rate`` is 0."""
    if not train or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = rng.random(x.shape, dtype=np.float32) >= rate
    keep = keep * (1.0 / (1.0 - rate))
    return record(x.data * keep, (x,), lambda g: (g * keep,))


def take_positions(x: Tensor, pos: np.ndarray) -> Tensor:
    """Select ``x[b, pos[b], :]`` from [B, L, D] -> [B, D]."""
    pos = np.asarray(pos, dtype=np.int64)
    bsz, length, _ = x.shape
    if pos.shape != (bsz,):
        raise ShapeError(f"positions shape {pos.shape} does not match batch {bsz}")
    if pos.size and (pos.min() < 0 or pos.max() >= length):
        raise IndexError(f"position outside sequence length {length}")
    rows = np.arange(bsz)

    def bw(g):
        out = np.zeros_like(x.data)
        out[rows, pos] = g
        return (out,)

    return record(x.data[rows, pos], (x,), bw)


# -- probabilities and losses ------------------------------------------------

def _softmax_backward(y: np.ndarray, scale: float):
    def bw(g):
        gx = g - (g * y).sum(axis=-1, keepdims=True)
        gx *= y
        if scale != 1.0:
            gx *= scale
        return (gx,)
    return bw


def softmax_t(logits, T: float = 1.0) -> Tensor:
    """Temperature softmax over the last axis: exp(o/T) / sum_j exp(o_j/T)."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    logits = as_tensor(logits)
    z = logits.data / T
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    return record(y, (logits,), _softmax_backward(y, 1.0 / T))


def masked_softmax(scores: Tensor, key_mask: np.ndarray) -> Tensor:
    """Softmax over the last axis with masked-out keys set to -inf first.

    ``key_mask`` broadcasts against ``scores``; every row needs one live key.
    """
    bias = np.where(key_mask, 0.0, -np.inf)
    y = scores.data + bias
    y -= y.max(axis=-1, keepdims=True)
    np.exp(y, out=y)
    y /= y.sum(axis=-1, keepdims=True)
    return record(y, (scores,), _softmax_backward(y, 1.0))


def _check_labels(labels, batch: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != batch:
        raise ShapeError(f"{labels.shape[0]} labels for batch of {batch}")
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return labels


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """Mean of -log probs[i, label_i]; probabilities below 1e-12 are clamped."""
    bsz = probs.shape[0]
    labels = _check_labels(labels, bsz)
    rows = np.arange(bsz)
    picked = probs.data[rows, labels]
    clamped = np.maximum(picked, LOG_FLOOR)
    live = picked >= LOG_FLOOR

    def bw(g):
        out = np.zeros_like(probs.data)
        out[rows, labels] = np.where(live, -g / (bsz * clamped), 0.0)
        return (out,)

    return record(np.array(-np.log(clamped).mean()), (probs,), bw)


def kl_div(p: Tensor, q) -> Tensor:
    """Mean over rows of sum_k q_k (log q_k - log p_k).

    ``p`` is the student distribution and receives the gradient; ``q`` is a
    fixed teacher target. Rows of both must sum to 1 within 1e-6.
    """
    qd = q.data if isinstance(q, Tensor) else np.asarray(q, dtype=float)
    if p.shape != qd.shape:
        raise ShapeError(f"kl_div shape mismatch: {p.shape} vs {qd.shape}")
    for name, arr in (("p", p.data), ("q", qd)):
        if not np.allclose(arr.sum(axis=-1), 1.0, rtol=0.0, atol=1e-6):
            raise ValueError(f"kl_div: rows of {name} must sum to 1")
    bsz = p.shape[0]
    pc = np.maximum(p.data, LOG_FLOOR)
    qc = np.maximum(qd, LOG_FLOOR)
    terms = np.where(qd > 0, qd * (np.log(qc) - np.log(pc)), 0.0)
    live = p.data >= LOG_FLOOR

    def bw(g):
        return (np.where(live, -g * qd / (bsz * pc), 0.0),)

    return record(np.array(terms.sum() / bsz), (p,), bw)
