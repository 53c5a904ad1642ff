"""Binarized execution path: xnor/popcount convolution and fused binarization.

A bit b encodes the bipolar value 2b-1. For a window X and filter W of n valid
bits, pc = popcount(xnor(X, W)) counts agreeing positions, so the true ±1 dot
product is d = 2*pc - n. Each filter carries an 8-bit scale alpha; the
convolution pre-activation is alpha * 2**alpha_scale_exp * d.

Binarization compares the pre-activation against a per-channel 8-bit constant
c (threshold fused out of batch norm):

    bit = 1  iff  x >= c   (direction GE, fused scale positive)
    bit = 1  iff  x <= c   (direction LE, fused scale negative)

``binconv_thresholded`` folds both stages into one integer comparison in the
popcount domain; no real arithmetic is involved.

Binary convolutions are valid-only (no spatial padding): zeros have no bipolar
encoding, so padded positions would be meaningless.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, NumericError, ShapeError
from .tensors import (
    ROLE_ACTIVATION,
    ROLE_WEIGHT,
    BitTensor,
    FloatTensor,
    Shape,
    pack_bits,
    round_half_away,
    unpack_bits,
)

DIR_GE = 0
DIR_LE = 1

# scalar threshold/scale tables may need coarser grids than activation tensors
_TABLE_EXP_MIN, _TABLE_EXP_MAX = -31, 8


def _check_table_exp(e: int, what: str) -> None:
    if not _TABLE_EXP_MIN <= e <= _TABLE_EXP_MAX:
        raise NumericError(f"{what} scale_exp {e} outside [{_TABLE_EXP_MIN}, {_TABLE_EXP_MAX}]")


@dataclass(frozen=True)
class BinConvParams:
    """Bit-packed filter bank (filters*c, kh, kw) with per-filter int8 alpha."""

    weights: BitTensor
    alpha: np.ndarray
    alpha_scale_exp: int
    stride: int = 1
    n_effective: int = 0
    pad_mode: str = "none"

    def __post_init__(self):
        if self.weights.role != ROLE_WEIGHT:
            raise ShapeError("binary conv weights must be packed with the weight role")
        if self.pad_mode != "none":
            raise ShapeError("binary convolutions support pad_mode='none' only")
        if self.stride < 1:
            raise ShapeError(f"invalid stride {self.stride}")
        _check_table_exp(self.alpha_scale_exp, "alpha")
        alpha = np.asarray(self.alpha, dtype=np.int8).reshape(-1)
        kwin = self.weights.shape.height * self.weights.shape.width
        if self.n_effective < 1 or self.n_effective % kwin:
            raise ShapeError(f"n_effective {self.n_effective} not a multiple of kernel window {kwin}")
        if alpha.size * self.n_effective != self.weights.valid_bits:
            raise ShapeError(
                f"{alpha.size} filters x {self.n_effective} bits != {self.weights.valid_bits} weight bits"
            )
        alpha = np.ascontiguousarray(alpha)
        alpha.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "n_effective", int(self.n_effective))

    @property
    def filters(self) -> int:
        return self.alpha.size

    @property
    def in_channels(self) -> int:
        return self.n_effective // (self.weights.shape.height * self.weights.shape.width)

    @property
    def kh(self) -> int:
        return self.weights.shape.height

    @property
    def kw(self) -> int:
        return self.weights.shape.width


@dataclass(frozen=True)
class BinActParams:
    """Per-channel int8 threshold table plus comparison directions."""

    c_threshold: np.ndarray
    c_scale_exp: int
    direction: np.ndarray

    def __post_init__(self):
        _check_table_exp(self.c_scale_exp, "threshold")
        c = np.asarray(self.c_threshold, dtype=np.int8).reshape(-1)
        d = np.asarray(self.direction, dtype=np.uint8).reshape(-1)
        if c.size != d.size or c.size < 1:
            raise ShapeError("need one threshold and one direction per channel")
        if d.size and d.max() > DIR_LE:
            raise ShapeError("directions must be DIR_GE (0) or DIR_LE (1)")
        for name, arr in (("c_threshold", c), ("direction", d)):
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def channels(self) -> int:
        return self.c_threshold.size


def _pack_rows(bits: np.ndarray, pad_value: int) -> np.ndarray:
    """Pack each row of a (rows, n) {0,1} array into its own 32-bit words."""
    rows, n = bits.shape
    n_words = (n + 31) // 32
    padded = np.full((rows, n_words * 32), pad_value, dtype=np.uint8)
    padded[:, :n] = bits
    b = np.packbits(padded, axis=1, bitorder="little").reshape(rows, n_words, 4).astype(np.uint32)
    return b[..., 0] | (b[..., 1] << 8) | (b[..., 2] << 16) | (b[..., 3] << 24)


def _popcount_map(x: BitTensor, p: BinConvParams) -> tuple[np.ndarray, int, int]:
    """Agreement counts pc per (position, filter); pads cancel via 0-vs-1 padding."""
    c, kh, kw = p.in_channels, p.kh, p.kw
    if x.shape.channels != c:
        raise ShapeError(f"filter channels {c} != input channels {x.shape.channels}")
    if kh > x.shape.height or kw > x.shape.width:
        raise ShapeError(f"kernel {kh}x{kw} does not fit input {x.shape.height}x{x.shape.width}")
    oh = (x.shape.height - kh) // p.stride + 1
    ow = (x.shape.width - kw) // p.stride + 1

    bits = unpack_bits(x).reshape(x.shape.as_tuple())
    win = np.lib.stride_tricks.sliding_window_view(bits, (kh, kw), axis=(1, 2))
    win = win[:, :: p.stride, :: p.stride]
    patches = win.transpose(1, 2, 0, 3, 4).reshape(oh * ow, -1)

    patch_words = _pack_rows(patches, pad_value=0)
    weight_words = unpack_bits(p.weights).reshape(p.filters, -1)
    weight_words = _pack_rows(weight_words, pad_value=1)

    agree = np.bitwise_not(patch_words[:, None, :] ^ weight_words[None, :, :])
    pc = np.bitwise_count(agree).sum(axis=2, dtype=np.int32)
    return pc, oh, ow


def binconv2d(x: BitTensor, p: BinConvParams) -> FloatTensor:
    """Pre-activation map alpha_f * 2**ase * (2*pc - n), exact in float32."""
    pc, oh, ow = _popcount_map(x, p)
    d = 2 * pc.astype(np.int64) - p.n_effective
    scaled = (p.alpha.astype(np.int64)[None, :] * d).astype(np.float64) * 2.0**p.alpha_scale_exp
    out = scaled.T.reshape(p.filters, oh, ow)
    return FloatTensor(Shape(p.filters, oh, ow), out.astype(np.float32))


def fuse_batchnorm(mu, sigma2, gamma, beta, eps: float = 1e-5) -> BinActParams:
    """Collapse batchnorm + sign into per-channel thresholds c = mu - beta/gamma*sqrt(sigma2+eps).

    Comparison direction follows the sign of gamma: bn(x) >= 0 iff x >= c when
    gamma > 0, iff x <= c when gamma < 0. The shared scale exponent is the
    finest grid on which every |c| still fits in int8.
    """
    mu, sigma2, gamma, beta = (np.asarray(a, dtype=np.float64).reshape(-1) for a in (mu, sigma2, gamma, beta))
    n = mu.size
    if not (sigma2.size == gamma.size == beta.size == n) or n < 1:
        raise ShapeError("batchnorm parameter arrays must share one length per channel")
    if np.any(gamma == 0):
        raise DegenerateChannelError("gamma must be nonzero for every channel")
    if np.any(sigma2 < 0) or eps < 0:
        raise NumericError("sigma2 and eps must be non-negative")
    c = mu - beta / gamma * np.sqrt(sigma2 + eps)
    if not np.all(np.isfinite(c)):
        raise NumericError("fused thresholds are non-finite")

    exp = _TABLE_EXP_MIN
    while exp <= _TABLE_EXP_MAX and np.abs(round_half_away(c / 2.0**exp)).max(initial=0) > 127:
        exp += 1
    if exp > _TABLE_EXP_MAX:
        raise NumericError(f"fused threshold magnitude {np.abs(c).max():g} too large for an int8 table")
    c_int = round_half_away(c / 2.0**exp).astype(np.int8)
    direction = np.where(gamma > 0, DIR_GE, DIR_LE).astype(np.uint8)
    return BinActParams(c_threshold=c_int, c_scale_exp=exp, direction=direction)


def binact(pre_activation: FloatTensor, p: BinActParams) -> BitTensor:
    """Threshold a real pre-activation map into an activation-role bit tensor."""
    if pre_activation.shape.channels != p.channels:
        raise ShapeError(
            f"{p.channels} thresholds for {pre_activation.shape.channels} channels"
        )
    c = (p.c_threshold.astype(np.float64) * 2.0**p.c_scale_exp).astype(np.float32)
    x = pre_activation.data
    ge = x >= c[:, None, None]
    le = x <= c[:, None, None]
    bits = np.where((p.direction == DIR_GE)[:, None, None], ge, le).astype(np.uint8)
    return pack_bits(bits, pre_activation.shape, ROLE_ACTIVATION)


def _integer_thresholds(p: BinConvParams, a: BinActParams) -> list[tuple[str, int]]:
    """Per-filter popcount-domain decision rules, derived with exact integers.

    With A = alpha and C = c brought to a common exponent, accepting
    alpha*(2*pc - n) >= c (direction GE) becomes:

        A > 0:  pc >= ceil((C + A*n) / (2A))
        A < 0:  pc <= floor((C + A*n) / (2A))
        A = 0:  constant (0 >= c)

    Direction LE mirrors the inequalities.
    """
    n = p.n_effective
    e = min(p.alpha_scale_exp, a.c_scale_exp)
    rules = []
    for f in range(p.filters):
        A = int(p.alpha[f]) << (p.alpha_scale_exp - e)
        C = int(a.c_threshold[f]) << (a.c_scale_exp - e)
        want_ge = a.direction[f] == DIR_GE
        if A == 0:
            bit = (C <= 0) if want_ge else (C >= 0)
            rules.append(("const1" if bit else "const0", 0))
            continue
        num = C + A * n
        den = 2 * A
        accept_high = (A > 0) == want_ge  # accept large pc vs small pc
        if accept_high:
            rules.append(("ge", -((-num) // den)))
        else:
            rules.append(("le", num // den))
    return rules


def binconv_thresholded(x: BitTensor, p: BinConvParams, a: BinActParams) -> BitTensor:
    """binact(binconv2d(x, p), a) as pure popcount-vs-threshold comparisons."""
    if a.channels != p.filters:
        raise ShapeError(f"{a.channels} thresholds for {p.filters} filters")
    pc, oh, ow = _popcount_map(x, p)
    bits = np.empty((p.filters, oh * ow), dtype=np.uint8)
    for f, (mode, t) in enumerate(_integer_thresholds(p, a)):
        if mode == "ge":
            bits[f] = pc[:, f] >= t
        elif mode == "le":
            bits[f] = pc[:, f] <= t
        else:
            bits[f] = 1 if mode == "const1" else 0
    return pack_bits(bits.reshape(-1), Shape(p.filters, oh, ow), ROLE_ACTIVATION)


def maxpool_bits(x: BitTensor, k: int, stride: int) -> BitTensor:
    """Window max over bits (OR-pooling): max in the bipolar domain is OR here."""
    if k < 1 or stride < 1:
        raise ShapeError(f"invalid pool size {k} or stride {stride}")
    if k > x.shape.height or k > x.shape.width:
        raise ShapeError(f"pool window {k} larger than input {x.shape.height}x{x.shape.width}")
    bits = unpack_bits(x).reshape(x.shape.as_tuple())
    oh = (x.shape.height - k) // stride + 1
    ow = (x.shape.width - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(bits, (k, k), axis=(1, 2))
    out = win[:, ::stride, ::stride].max(axis=(3, 4))
    return pack_bits(out, Shape(x.shape.channels, oh, ow), ROLE_ACTIVATION)
