"""Fixed-point (q=8) execution path.

Convolution/FC accumulate integer products X_i*W_i plus a pre-scaled bias,
then requantize with a per-layer right shift:

    out = sat_int8(round_half_away(acc / 2**out_scale_shift))
    out_scale_exp = x.scale_exp + w.scale_exp + out_scale_shift

Two accumulator modes:

* ``wide``    — exact accumulation (reference MCU kernels with 32-bit
  accumulators; no wraparound is modeled, sums in scope stay far below 2^31);
* ``paper16`` — the running sum saturates to signed 16 bits after every
  addition, starting from sat16(bias), taps traversed channel-major
  row-major. Deterministic by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError
from .floatref import conv_output_hw
from .tensors import QuantTensor, Shape

ACC_WIDE = "wide"
ACC_PAPER16 = "paper16"

_I16_MIN, _I16_MAX = -(2**15), 2**15 - 1


def _check_acc_mode(mode: str) -> None:
    if mode not in (ACC_WIDE, ACC_PAPER16):
        raise NumericError(f"unknown accumulator mode {mode!r}")


def _check_shift(shift: int) -> None:
    if not 0 <= shift <= 31:
        raise NumericError(f"out_scale_shift {shift} outside [0, 31]")


@dataclass(frozen=True)
class Int8ConvParams:
    """Convolution filter bank; weights shaped (filters*c, kh, kw)."""

    weights: QuantTensor
    bias: np.ndarray
    stride: int = 1
    pad: int = 0
    out_scale_shift: int = 0
    acc_mode: str = ACC_WIDE

    def __post_init__(self):
        _check_shift(self.out_scale_shift)
        _check_acc_mode(self.acc_mode)
        bias = np.asarray(self.bias, dtype=np.int32).reshape(-1)
        if bias.size < 1:
            raise ShapeError("need at least one filter/bias")
        if self.weights.shape.channels % bias.size:
            raise ShapeError(
                f"weight channels {self.weights.shape.channels} not divisible by "
                f"{bias.size} filters"
            )
        if self.stride < 1 or self.pad < 0:
            raise ShapeError(f"invalid stride {self.stride} or pad {self.pad}")
        bias = np.ascontiguousarray(bias)
        bias.flags.writeable = False
        object.__setattr__(self, "bias", bias)

    @property
    def filters(self) -> int:
        return self.bias.size

    @property
    def in_channels(self) -> int:
        return self.weights.shape.channels // self.filters

    @property
    def kh(self) -> int:
        return self.weights.shape.height

    @property
    def kw(self) -> int:
        return self.weights.shape.width


@dataclass(frozen=True)
class Int8FcParams:
    """Dense layer; weights shaped (out_features, in_features, 1)."""

    weights: QuantTensor
    bias: np.ndarray
    out_scale_shift: int = 0
    acc_mode: str = ACC_WIDE

    def __post_init__(self):
        _check_shift(self.out_scale_shift)
        _check_acc_mode(self.acc_mode)
        bias = np.asarray(self.bias, dtype=np.int32).reshape(-1)
        if self.weights.shape.width != 1 or bias.size != self.weights.shape.channels:
            raise ShapeError("fc weights must be (out, in, 1) with one bias per output")
        bias = np.ascontiguousarray(bias)
        bias.flags.writeable = False
        object.__setattr__(self, "bias", bias)

    @property
    def out_features(self) -> int:
        return self.weights.shape.channels

    @property
    def in_features(self) -> int:
        return self.weights.shape.height


def requantize(acc: np.ndarray, shift: int) -> np.ndarray:
    """sat_int8(round_half_away(acc / 2**shift)) on integer accumulators."""
    _check_shift(shift)
    acc = np.asarray(acc, dtype=np.int64)
    if shift:
        half = np.int64(1) << np.int64(shift - 1)
        rounded = np.sign(acc) * ((np.abs(acc) + half) >> np.int64(shift))
    else:
        rounded = acc
    return np.clip(rounded, -128, 127).astype(np.int8)


def _accumulate(patches: np.ndarray, wmat: np.ndarray, bias: np.ndarray, acc_mode: str) -> np.ndarray:
    """Sum-of-products per (position, filter); patches (P, n), wmat (F, n)."""
    if acc_mode == ACC_WIDE:
        return patches.astype(np.int64) @ wmat.astype(np.int64).T + bias.astype(np.int64)
    acc = np.clip(bias.astype(np.int64), _I16_MIN, _I16_MAX)
    acc = np.broadcast_to(acc, (patches.shape[0], bias.size)).copy()
    p64 = patches.astype(np.int64)
    w64 = wmat.astype(np.int64)
    for t in range(patches.shape[1]):  # tap order: channel-major, then row, then col
        acc += p64[:, t, None] * w64[None, :, t]
        np.clip(acc, _I16_MIN, _I16_MAX, out=acc)
    return acc


def _out_scale(x: QuantTensor, w: QuantTensor, shift: int) -> int:
    e = x.scale_exp + w.scale_exp + shift
    if not -31 <= e <= 0:
        raise NumericError(f"output scale_exp {e} outside [-31, 0]; adjust out_scale_shift")
    return e


def _im2col(x: QuantTensor, kh: int, kw: int, stride: int, pad: int) -> tuple[np.ndarray, int, int]:
    oh, ow = conv_output_hw(x.shape.height, x.shape.width, kh, kw, stride, pad)
    src = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(src, (kh, kw), axis=(1, 2))
    win = win[:, ::stride, ::stride]  # (c, oh, ow, kh, kw)
    patches = win.transpose(1, 2, 0, 3, 4).reshape(oh * ow, -1)
    return patches, oh, ow


def conv2d_int8(x: QuantTensor, p: Int8ConvParams) -> QuantTensor:
    if p.in_channels != x.shape.channels:
        raise ShapeError(f"filter channels {p.in_channels} != input channels {x.shape.channels}")
    out_exp = _out_scale(x, p.weights, p.out_scale_shift)
    patches, oh, ow = _im2col(x, p.kh, p.kw, p.stride, p.pad)
    wmat = p.weights.data.reshape(p.filters, -1)
    acc = _accumulate(patches, wmat, p.bias, p.acc_mode)
    out = requantize(acc, p.out_scale_shift).T.reshape(p.filters, oh, ow)
    return QuantTensor(Shape(p.filters, oh, ow), out, out_exp)


def conv2d_int8_acc(x: QuantTensor, p: Int8ConvParams) -> np.ndarray:
    """Raw accumulators shaped (filters, oh, ow), at scale x.e + w.e."""
    if p.in_channels != x.shape.channels:
        raise ShapeError(f"filter channels {p.in_channels} != input channels {x.shape.channels}")
    patches, oh, ow = _im2col(x, p.kh, p.kw, p.stride, p.pad)
    wmat = p.weights.data.reshape(p.filters, -1)
    return _accumulate(patches, wmat, p.bias, p.acc_mode).T.reshape(p.filters, oh, ow)


def fc_int8_acc(x: QuantTensor, p: Int8FcParams) -> np.ndarray:
    """Raw accumulators (classifier heads consume these as int32 logits)."""
    v = x.flat()
    if v.size != p.in_features:
        raise ShapeError(f"fc expects {p.in_features} inputs, got {v.size}")
    wmat = p.weights.data.reshape(p.out_features, p.in_features)
    return _accumulate(v[None, :], wmat, p.bias, p.acc_mode)[0]


def fc_int8(x: QuantTensor, p: Int8FcParams) -> QuantTensor:
    out_exp = _out_scale(x, p.weights, p.out_scale_shift)
    acc = fc_int8_acc(x, p)
    return QuantTensor(Shape(p.out_features), requantize(acc, p.out_scale_shift), out_exp)


def maxpool_int8(x: QuantTensor, k: int, stride: int) -> QuantTensor:
    if k < 1 or stride < 1:
        raise ShapeError(f"invalid pool size {k} or stride {stride}")
    if k > x.shape.height or k > x.shape.width:
        raise ShapeError(f"pool window {k} larger than input {x.shape.height}x{x.shape.width}")
    oh = (x.shape.height - k) // stride + 1
    ow = (x.shape.width - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x.data, (k, k), axis=(1, 2))
    out = win[:, ::stride, ::stride].max(axis=(3, 4))
    return QuantTensor(Shape(x.shape.channels, oh, ow), out, x.scale_exp)


def relu_int8(x: QuantTensor) -> QuantTensor:
    return QuantTensor(x.shape, np.maximum(x.data, np.int8(0)), x.scale_exp)
