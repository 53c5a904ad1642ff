"""Naive float32 reference layers.

These are the correctness oracles for both quantized execution paths, written
as plain window loops on purpose. Filter banks are stored as a single tensor
of shape (filters*c, kh, kw): filter f owns the channel block [f*c, (f+1)*c).
"""

import numpy as np

from .errors import ShapeError
from .tensors import FloatTensor, Shape


def conv_output_hw(in_h: int, in_w: int, kh: int, kw: int, stride: int, pad: int) -> tuple[int, int]:
    oh = (in_h + 2 * pad - kh) // stride + 1
    ow = (in_w + 2 * pad - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"kernel {kh}x{kw} does not fit input {in_h}x{in_w} with pad {pad}")
    return oh, ow


def _filter_bank(w: FloatTensor, n_filters: int) -> np.ndarray:
    if w.shape.channels % n_filters:
        raise ShapeError(f"weight channels {w.shape.channels} not divisible by {n_filters} filters")
    c = w.shape.channels // n_filters
    return w.data.reshape(n_filters, c, w.shape.height, w.shape.width)


def conv2d_ref(x: FloatTensor, w: FloatTensor, bias, stride: int = 1, pad: int = 0) -> FloatTensor:
    """Cross-correlation (no kernel flip) with zero padding and bias add."""
    bias = np.asarray(bias, dtype=np.float32).reshape(-1)
    filters = _filter_bank(w, bias.size)
    n, c, kh, kw = filters.shape
    if c != x.shape.channels:
        raise ShapeError(f"filter channels {c} != input channels {x.shape.channels}")
    if stride < 1 or pad < 0:
        raise ShapeError(f"invalid stride {stride} or pad {pad}")
    oh, ow = conv_output_hw(x.shape.height, x.shape.width, kh, kw, stride, pad)
    src = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
    out = np.empty((n, oh, ow), dtype=np.float32)
    for f in range(n):
        for oy in range(oh):
            for ox in range(ow):
                window = src[:, oy * stride : oy * stride + kh, ox * stride : ox * stride + kw]
                out[f, oy, ox] = np.sum(window * filters[f], dtype=np.float32) + bias[f]
    return FloatTensor(Shape(n, oh, ow), out)


def maxpool_ref(x: FloatTensor, k: int, stride: int) -> FloatTensor:
    if k < 1 or stride < 1:
        raise ShapeError(f"invalid pool size {k} or stride {stride}")
    if k > x.shape.height or k > x.shape.width:
        raise ShapeError(f"pool window {k} larger than input {x.shape.height}x{x.shape.width}")
    oh = (x.shape.height - k) // stride + 1
    ow = (x.shape.width - k) // stride + 1
    out = np.empty((x.shape.channels, oh, ow), dtype=np.float32)
    for oy in range(oh):
        for ox in range(ow):
            window = x.data[:, oy * stride : oy * stride + k, ox * stride : ox * stride + k]
            out[:, oy, ox] = window.max(axis=(1, 2))
    return FloatTensor(Shape(x.shape.channels, oh, ow), out)


def fc_ref(x: FloatTensor, w: FloatTensor, bias) -> FloatTensor:
    """Dense layer: w has shape (out_features, in_features, 1)."""
    bias = np.asarray(bias, dtype=np.float32).reshape(-1)
    out_features, in_features = w.shape.channels, w.shape.height
    if w.shape.width != 1 or bias.size != out_features:
        raise ShapeError("fc weights must be (out, in, 1) with one bias per output")
    v = x.flat()
    if v.size != in_features:
        raise ShapeError(f"fc expects {in_features} inputs, got {v.size}")
    out = w.data.reshape(out_features, in_features) @ v + bias
    return FloatTensor(Shape(out_features), out.astype(np.float32))


def batchnorm_ref(x: FloatTensor, mu, sigma2, gamma, beta, eps: float = 1e-5) -> FloatTensor:
    """Per-channel gamma*(x-mu)/sqrt(sigma2+eps) + beta."""
    c = x.shape.channels
    mu, sigma2, gamma, beta = (np.asarray(a, dtype=np.float32).reshape(-1) for a in (mu, sigma2, gamma, beta))
    if not (mu.size == sigma2.size == gamma.size == beta.size == c):
        raise ShapeError(f"batchnorm parameter lengths must equal {c} channels")
    denom = np.sqrt(sigma2 + np.float32(eps))
    out = gamma[:, None, None] * (x.data - mu[:, None, None]) / denom[:, None, None] + beta[:, None, None]
    return FloatTensor(x.shape, out.astype(np.float32))


def relu_ref(x: FloatTensor) -> FloatTensor:
    return FloatTensor(x.shape, np.maximum(x.data, np.float32(0)))


def softmax_ref(logits) -> np.ndarray:
    """Stable float32 softmax over a flat logit vector."""
    v = np.asarray(logits, dtype=np.float32).reshape(-1)
    if v.size < 1:
        raise ShapeError("softmax needs at least one logit")
    shifted = v - v.max()
    e = np.exp(shifted, dtype=np.float32)
    return (e / e.sum(dtype=np.float32)).astype(np.float32)
