"""Core tensor containers: float32, int8 fixed-point, and bit-packed binary.

Layout rules shared by every container and by the on-disk format:

* logical element order is row-major channel-major, i.e. C order over (c, h, w);
* bit-packed tensors place logical bit i at bit (i mod 32) of 32-bit word
  (i div 32), LSB first;
* pad bits after the last logical bit are 0 for activation tensors and 1 for
  weight tensors, so xnor(pad, pad) = 0 and pads never contribute to a
  popcount.

int8 values represent v = data * 2**scale_exp (power-of-two scale, no zero
point). Rounding is always half-away-from-zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError

BIT_LAYOUT = "chw-lsb32"

ROLE_ACTIVATION = "activation"
ROLE_WEIGHT = "weight"

_MAX_ELEMENTS = 2**32 - 1


@dataclass(frozen=True)
class Shape:
    """Logical (channels, height, width) extent. Vectors use height=width=1."""

    channels: int
    height: int = 1
    width: int = 1

    def __post_init__(self):
        for name in ("channels", "height", "width"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ShapeError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.count > _MAX_ELEMENTS:
            raise ShapeError(f"element count {self.count} exceeds 32-bit range")

    @property
    def count(self) -> int:
        return self.channels * self.height * self.width

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _as_chw(data, shape: Shape, dtype) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    if arr.size != shape.count:
        raise ShapeError(
            f"data length {arr.size} does not match shape {shape.as_tuple()} "
            f"({shape.count} elements)"
        )
    return _freeze(arr.reshape(shape.as_tuple()).copy())


@dataclass(frozen=True)
class FloatTensor:
    """32-bit float tensor, the reference-path representation."""

    shape: Shape
    data: np.ndarray

    def __post_init__(self):
        arr = _as_chw(self.data, self.shape, np.float32)
        if not np.all(np.isfinite(arr)):
            raise NumericError("FloatTensor values must be finite")
        object.__setattr__(self, "data", arr)

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class QuantTensor:
    """int8 tensor with value = data * 2**scale_exp, scale_exp in [-31, 0]."""

    shape: Shape
    data: np.ndarray
    scale_exp: int

    def __post_init__(self):
        if not -31 <= int(self.scale_exp) <= 0:
            raise NumericError(f"scale_exp {self.scale_exp} outside [-31, 0]")
        object.__setattr__(self, "scale_exp", int(self.scale_exp))
        object.__setattr__(self, "data", _as_chw(self.data, self.shape, np.int8))

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class BitTensor:
    """Bit-packed {0,1} tensor; bit b encodes the bipolar value 2*b - 1."""

    shape: Shape
    words: np.ndarray
    valid_bits: int
    role: str
    layout: str = BIT_LAYOUT

    def __post_init__(self):
        if self.role not in (ROLE_ACTIVATION, ROLE_WEIGHT):
            raise ShapeError(f"unknown bit-tensor role {self.role!r}")
        if self.layout != BIT_LAYOUT:
            raise ShapeError(f"unsupported bit layout {self.layout!r}")
        if int(self.valid_bits) != self.shape.count:
            raise ShapeError(
                f"valid_bits {self.valid_bits} does not match shape count {self.shape.count}"
            )
        object.__setattr__(self, "valid_bits", int(self.valid_bits))
        words = np.asarray(self.words, dtype=np.uint32).reshape(-1)
        expected = (self.valid_bits + 31) // 32
        if words.size != expected:
            raise ShapeError(f"expected {expected} words for {self.valid_bits} bits, got {words.size}")
        object.__setattr__(self, "words", _freeze(words.copy()))
        pad = _pad_bits(self)
        want = 0 if self.role == ROLE_ACTIVATION else 1
        if pad.size and not np.all(pad == want):
            raise ShapeError(f"pad bits must all be {want} for role {self.role!r}")


def words_from_bits(bits: np.ndarray) -> np.ndarray:
    """Assemble 32-bit word values from a {0,1} array whose length is a multiple of 32.

    Bit i lands at bit position (i mod 32) of word (i div 32). Word values are
    built arithmetically so the layout is identical on any host endianness.
    """
    b = np.packbits(bits.astype(np.uint8), bitorder="little").reshape(-1, 4).astype(np.uint32)
    return b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16) | (b[:, 3] << 24)


def bits_from_words(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of words_from_bits, truncated to the first n_bits logical bits."""
    shifts = np.arange(32, dtype=np.uint32)
    bits = (words[:, None] >> shifts) & np.uint32(1)
    return bits.reshape(-1)[:n_bits].astype(np.uint8)


def _pad_bits(t: BitTensor) -> np.ndarray:
    all_bits = bits_from_words(t.words, t.words.size * 32)
    return all_bits[t.valid_bits :]


def pack_bits(values, shape: Shape, role: str) -> BitTensor:
    """Pack a {0,1} sequence into 32-bit words, padding per the role convention."""
    bits = np.asarray(values, dtype=np.uint8).reshape(-1)
    if bits.size != shape.count:
        raise ShapeError(f"got {bits.size} bits for shape with {shape.count} elements")
    if bits.size and bits.max() > 1:
        raise ShapeError("bit values must be 0 or 1")
    if role not in (ROLE_ACTIVATION, ROLE_WEIGHT):
        raise ShapeError(f"unknown bit-tensor role {role!r}")
    n_words = (bits.size + 31) // 32
    pad_value = 0 if role == ROLE_ACTIVATION else 1
    padded = np.full(n_words * 32, pad_value, dtype=np.uint8)
    padded[: bits.size] = bits
    return BitTensor(shape=shape, words=words_from_bits(padded), valid_bits=bits.size, role=role)


def unpack_bits(t: BitTensor) -> np.ndarray:
    """Logical bits of ``t`` as a uint8 {0,1} array of length valid_bits."""
    return bits_from_words(t.words, t.valid_bits)


def round_half_away(v: np.ndarray) -> np.ndarray:
    """Round to nearest integer, ties away from zero (fixed-point convention)."""
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def quantize_array(values, scale_exp: int) -> np.ndarray:
    """Map real values onto the int8 grid 2**scale_exp, saturating at ±127/−128."""
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NumericError("cannot quantize non-finite values")
    scaled = round_half_away(v / 2.0**scale_exp)
    return np.clip(scaled, -128, 127).astype(np.int8)


def quantize(f: FloatTensor, scale_exp: int) -> QuantTensor:
    """Quantize a float tensor to int8 at the given power-of-two scale."""
    if not -31 <= scale_exp <= 0:
        raise NumericError(f"scale_exp {scale_exp} outside [-31, 0]")
    return QuantTensor(shape=f.shape, data=quantize_array(f.data, scale_exp), scale_exp=scale_exp)


def dequantize(q: QuantTensor) -> FloatTensor:
    """Exact float32 reconstruction data * 2**scale_exp (int8 grids are exact in f32)."""
    return FloatTensor(shape=q.shape, data=q.data.astype(np.float32) * np.float32(2.0**q.scale_exp))


def bipolar(t: BitTensor) -> np.ndarray:
    """Unpack to the bipolar {-1,+1} int8 values the bits encode, shaped (c, h, w)."""
    bits = unpack_bits(t).astype(np.int8)
    return (2 * bits - 1).reshape(t.shape.as_tuple())
