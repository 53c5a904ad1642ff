"""Two-arm model container: layer specs, validation, .cpnt serialization, builders.

File layout (version 1, little-endian throughout):

    magic "CPNT" | u16 version | u8 arm_count=2 | u8 reserved
    arm record (bnn arm first, then int8 arm):
        u8 arm_kind (0=bnn, 1=int8) | u32 channels,height,width | u32 num_classes
        u16 layer_count
        layer record:
            u8 kind | u8 name_len | name utf-8 | u32 param_len | param block
    u16 label_count | per label: u8 len + utf-8
    u32 crc32 of all preceding bytes

Param blocks are fixed per kind; see FORMAT.md for the normative byte-level
description (the exporter writes this format independently).
"""

import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bnn import BinActParams, BinConvParams
from .errors import (
    ChecksumError,
    CoopNetError,
    MagicError,
    ModelFormatError,
    ShapeChainError,
    ShapeError,
    VersionError,
)
from .floatref import conv_output_hw
from .int8 import ACC_PAPER16, ACC_WIDE, Int8ConvParams, Int8FcParams
from .tensors import BitTensor, QuantTensor, Shape, pack_bits

MAGIC = b"CPNT"
FORMAT_VERSION = 1

ARM_BNN = "bnn"
ARM_INT8 = "int8"
_ARM_CODES = {ARM_BNN: 0, ARM_INT8: 1}
_ARM_NAMES = {v: k for k, v in _ARM_CODES.items()}

KIND_CONV_INT8 = "conv_int8"
KIND_FC_INT8 = "fc_int8"
KIND_MAXPOOL = "maxpool"
KIND_RELU = "relu"
KIND_BINCONV_FUSED = "binconv_fused"
KIND_BINACT_BRIDGE = "binact_bridge"
KIND_SOFTMAX_HEAD = "softmax_head"

_KIND_CODES = {
    KIND_CONV_INT8: 1,
    KIND_FC_INT8: 2,
    KIND_MAXPOOL: 3,
    KIND_RELU: 4,
    KIND_BINCONV_FUSED: 5,
    KIND_BINACT_BRIDGE: 6,
    KIND_SOFTMAX_HEAD: 7,
}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

PARAMETERIZED_KINDS = {KIND_CONV_INT8, KIND_FC_INT8, KIND_BINCONV_FUSED}
INT8_KINDS = {KIND_CONV_INT8, KIND_FC_INT8}
BINARY_KINDS = {KIND_BINCONV_FUSED, KIND_BINACT_BRIDGE}


@dataclass(frozen=True)
class PoolParams:
    k: int
    stride: int

    def __post_init__(self):
        if self.k < 1 or self.stride < 1:
            raise ShapeError(f"invalid pool size {self.k} or stride {self.stride}")


@dataclass(frozen=True)
class BinConvFusedParams:
    """Binary convolution plus its fused binarization thresholds."""

    conv: BinConvParams
    act: BinActParams

    def __post_init__(self):
        if self.act.channels != self.conv.filters:
            raise ShapeError(
                f"{self.act.channels} thresholds for {self.conv.filters} filters"
            )


_PARAM_TYPES = {
    KIND_CONV_INT8: Int8ConvParams,
    KIND_FC_INT8: Int8FcParams,
    KIND_MAXPOOL: PoolParams,
    KIND_RELU: type(None),
    KIND_BINCONV_FUSED: BinConvFusedParams,
    KIND_BINACT_BRIDGE: BinActParams,
    KIND_SOFTMAX_HEAD: type(None),
}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    params: object = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ShapeError(f"unknown layer kind {self.kind!r}")
        if not isinstance(self.params, _PARAM_TYPES[self.kind]):
            raise ShapeError(
                f"layer {self.name!r}: kind {self.kind} needs "
                f"{_PARAM_TYPES[self.kind].__name__} params, got {type(self.params).__name__}"
            )
        if not self.name or len(self.name.encode()) > 255:
            raise ShapeError("layer name must be 1..255 utf-8 bytes")


def _next_shape(layer: LayerSpec, shape: Shape, value: str) -> tuple[Shape, str]:
    """One step of the shape/value-kind chain; raises ShapeChainError on breaks."""

    def fail(msg):
        raise ShapeChainError(f"layer {layer.name!r}: {msg}")

    p = layer.params
    if layer.kind == KIND_CONV_INT8:
        if value not in ("int8", "bits"):
            fail(f"conv_int8 cannot consume {value}")
        if p.in_channels != shape.channels:
            fail(f"expects {p.in_channels} channels, got {shape.channels}")
        try:
            oh, ow = conv_output_hw(shape.height, shape.width, p.kh, p.kw, p.stride, p.pad)
        except ShapeError as e:
            fail(str(e))
        return Shape(p.filters, oh, ow), "int8"
    if layer.kind == KIND_FC_INT8:
        if value not in ("int8", "bits"):
            fail(f"fc_int8 cannot consume {value}")
        if p.in_features != shape.count:
            fail(f"expects {p.in_features} inputs, got {shape.count}")
        return Shape(p.out_features), "int8"
    if layer.kind == KIND_MAXPOOL:
        if value not in ("int8", "bits"):
            fail(f"maxpool cannot consume {value}")
        if p.k > shape.height or p.k > shape.width:
            fail(f"pool window {p.k} larger than {shape.height}x{shape.width}")
        oh = (shape.height - p.k) // p.stride + 1
        ow = (shape.width - p.k) // p.stride + 1
        return Shape(shape.channels, oh, ow), value
    if layer.kind == KIND_RELU:
        if value != "int8":
            fail(f"relu cannot consume {value}")
        return shape, value
    if layer.kind == KIND_BINACT_BRIDGE:
        if value != "int8":
            fail(f"binact_bridge cannot consume {value}")
        if p.channels != shape.channels:
            fail(f"{p.channels} thresholds for {shape.channels} channels")
        return shape, "bits"
    if layer.kind == KIND_BINCONV_FUSED:
        if value != "bits":
            fail(f"binconv_fused cannot consume {value}")
        conv = p.conv
        if conv.in_channels != shape.channels:
            fail(f"expects {conv.in_channels} channels, got {shape.channels}")
        if conv.kh > shape.height or conv.kw > shape.width:
            fail(f"kernel {conv.kh}x{conv.kw} does not fit {shape.height}x{shape.width}")
        oh = (shape.height - conv.kh) // conv.stride + 1
        ow = (shape.width - conv.kw) // conv.stride + 1
        return Shape(conv.filters, oh, ow), "bits"
    if layer.kind == KIND_SOFTMAX_HEAD:
        if value != "int8":
            fail(f"softmax_head cannot consume {value}")
        if shape.height != 1 or shape.width != 1:
            fail(f"softmax_head expects a flat vector, got {shape.as_tuple()}")
        return shape, "probs"
    raise ShapeChainError(f"layer {layer.name!r}: unhandled kind {layer.kind}")


@dataclass(frozen=True)
class ModelGraph:
    layers: tuple
    input_shape: Shape
    num_classes: int
    arm: str

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.arm not in _ARM_CODES:
            raise ShapeError(f"unknown arm {self.arm!r}")
        if self.num_classes < 2:
            raise ShapeError("need at least two classes")
        if not self.layers:
            raise ShapeChainError("graph has no layers")
        heads = [l for l in self.layers if l.kind == KIND_SOFTMAX_HEAD]
        if len(heads) != 1 or self.layers[-1].kind != KIND_SOFTMAX_HEAD:
            raise ShapeChainError("graph must end with exactly one softmax_head")
        if self.arm == ARM_INT8:
            bad = [l.name for l in self.layers if l.kind in BINARY_KINDS]
            if bad:
                raise ShapeChainError(f"int8 arm contains binary layers: {bad}")
        shape, value = self.input_shape, "int8"
        for layer in self.layers:
            shape, value = _next_shape(layer, shape, value)
        if value != "probs" or shape.channels != self.num_classes:
            raise ShapeChainError(
                f"graph output {shape.as_tuple()} does not produce {self.num_classes} class probabilities"
            )
        if self.arm == ARM_BNN:
            parameterized = [l for l in self.layers if l.kind in PARAMETERIZED_KINDS]
            if not parameterized:
                raise ShapeChainError("bnn arm has no parameterized layers")
            if parameterized[0].kind not in INT8_KINDS or parameterized[-1].kind not in INT8_KINDS:
                raise ShapeChainError("bnn arm must keep its first and last parameterized layers in int8")

    def layer_names(self) -> list[str]:
        return [l.name for l in self.layers]


@dataclass(frozen=True)
class CoopModel:
    bnn: ModelGraph
    int8: ModelGraph
    class_labels: Optional[tuple] = None

    def __post_init__(self):
        if self.bnn.arm != ARM_BNN or self.int8.arm != ARM_INT8:
            raise ShapeError("CoopModel arms must be (bnn, int8) graphs")
        if self.bnn.input_shape != self.int8.input_shape:
            raise ShapeError("arms must share the input shape")
        if self.bnn.num_classes != self.int8.num_classes:
            raise ShapeError("arms must share the class count")
        if self.class_labels is not None:
            labels = tuple(str(x) for x in self.class_labels)
            if len(labels) != self.num_classes:
                raise ShapeError(f"{len(labels)} labels for {self.num_classes} classes")
            object.__setattr__(self, "class_labels", labels)

    @property
    def input_shape(self) -> Shape:
        return self.bnn.input_shape

    @property
    def num_classes(self) -> int:
        return self.bnn.num_classes


# ---------------------------------------------------------------------------
# serialization


def _i8_bytes(arr) -> bytes:
    return np.asarray(arr, dtype="<i1").tobytes()


def _i32_bytes(arr) -> bytes:
    return np.asarray(arr, dtype="<i4").tobytes()


def _u32_bytes(arr) -> bytes:
    return np.asarray(arr, dtype="<u4").tobytes()


_ACC_CODES = {ACC_WIDE: 0, ACC_PAPER16: 1}
_ACC_NAMES = {v: k for k, v in _ACC_CODES.items()}


def _encode_params(layer: LayerSpec) -> bytes:
    p = layer.params
    if layer.kind == KIND_CONV_INT8:
        head = struct.pack(
            "<HHBBBBBBbB",
            p.filters,
            p.in_channels,
            p.kh,
            p.kw,
            p.stride,
            p.pad,
            _ACC_CODES[p.acc_mode],
            p.out_scale_shift,
            p.weights.scale_exp,
            0,
        )
        return head + _i8_bytes(p.weights.flat()) + _i32_bytes(p.bias)
    if layer.kind == KIND_FC_INT8:
        head = struct.pack(
            "<IIBBbB",
            p.out_features,
            p.in_features,
            _ACC_CODES[p.acc_mode],
            p.out_scale_shift,
            p.weights.scale_exp,
            0,
        )
        return head + _i8_bytes(p.weights.flat()) + _i32_bytes(p.bias)
    if layer.kind == KIND_MAXPOOL:
        return struct.pack("<BB", p.k, p.stride)
    if layer.kind == KIND_BINCONV_FUSED:
        conv, act = p.conv, p.act
        head = struct.pack(
            "<HHBBBBbb",
            conv.filters,
            conv.in_channels,
            conv.kh,
            conv.kw,
            conv.stride,
            0,
            conv.alpha_scale_exp,
            act.c_scale_exp,
        )
        body = _i8_bytes(conv.alpha) + _i8_bytes(act.c_threshold) + bytes(act.direction.tolist())
        words = conv.weights.words
        return head + body + struct.pack("<I", words.size) + _u32_bytes(words)
    if layer.kind == KIND_BINACT_BRIDGE:
        head = struct.pack("<HbB", p.channels, p.c_scale_exp, 0)
        return head + _i8_bytes(p.c_threshold) + bytes(p.direction.tolist())
    return b""  # relu, softmax_head


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise ModelFormatError("unexpected end of data while parsing")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt)

    def done(self) -> bool:
        return self.pos == len(self.buf)


def _decode_params(kind: str, name: str, r: _Reader):
    if kind == KIND_CONV_INT8:
        filters, in_c, kh, kw, stride, pad, acc, shift, wexp, _ = r.unpack("<HHBBBBBBbB")
        weights = QuantTensor(Shape(filters * in_c, kh, kw), r.array("<i1", filters * in_c * kh * kw), wexp)
        bias = r.array("<i4", filters)
        return Int8ConvParams(
            weights=weights, bias=bias, stride=stride, pad=pad,
            out_scale_shift=shift, acc_mode=_ACC_NAMES.get(acc, "?"),
        )
    if kind == KIND_FC_INT8:
        out_f, in_f, acc, shift, wexp, _ = r.unpack("<IIBBbB")
        weights = QuantTensor(Shape(out_f, in_f, 1), r.array("<i1", out_f * in_f), wexp)
        bias = r.array("<i4", out_f)
        return Int8FcParams(weights=weights, bias=bias, out_scale_shift=shift, acc_mode=_ACC_NAMES.get(acc, "?"))
    if kind == KIND_MAXPOOL:
        k, stride = r.unpack("<BB")
        return PoolParams(k, stride)
    if kind == KIND_BINCONV_FUSED:
        filters, in_c, kh, kw, stride, _, ase, cse = r.unpack("<HHBBBBbb")
        alpha = r.array("<i1", filters)
        c = r.array("<i1", filters)
        direction = r.array("<u1", filters)
        (word_count,) = r.unpack("<I")
        n_bits = filters * in_c * kh * kw
        if word_count != (n_bits + 31) // 32:
            raise ModelFormatError(f"layer {name!r}: word count {word_count} inconsistent with dims")
        words = r.array("<u4", word_count)
        weights = BitTensor(Shape(filters * in_c, kh, kw), words, n_bits, role="weight")
        conv = BinConvParams(
            weights=weights, alpha=alpha, alpha_scale_exp=ase, stride=stride, n_effective=in_c * kh * kw
        )
        act = BinActParams(c_threshold=c, c_scale_exp=cse, direction=direction)
        return BinConvFusedParams(conv=conv, act=act)
    if kind == KIND_BINACT_BRIDGE:
        channels, cse, _ = r.unpack("<HbB")
        c = r.array("<i1", channels)
        direction = r.array("<u1", channels)
        return BinActParams(c_threshold=c, c_scale_exp=cse, direction=direction)
    return None


def _encode_arm(graph: ModelGraph) -> bytes:
    out = bytearray()
    out += struct.pack(
        "<BIIII",
        _ARM_CODES[graph.arm],
        graph.input_shape.channels,
        graph.input_shape.height,
        graph.input_shape.width,
        graph.num_classes,
    )
    out += struct.pack("<H", len(graph.layers))
    for layer in graph.layers:
        name = layer.name.encode()
        params = _encode_params(layer)
        out += struct.pack("<BB", _KIND_CODES[layer.kind], len(name))
        out += name
        out += struct.pack("<I", len(params))
        out += params
    return bytes(out)


def _decode_arm(r: _Reader) -> ModelGraph:
    code, c, h, w, num_classes = r.unpack("<BIIII")
    if code not in _ARM_NAMES:
        raise ModelFormatError(f"unknown arm code {code}")
    (layer_count,) = r.unpack("<H")
    layers = []
    for _ in range(layer_count):
        kcode, name_len = r.unpack("<BB")
        if kcode not in _KIND_NAMES:
            raise ModelFormatError(f"unknown layer kind code {kcode}")
        kind = _KIND_NAMES[kcode]
        try:
            name = r.take(name_len).decode()
        except UnicodeDecodeError as e:
            raise ModelFormatError(f"layer name is not valid utf-8: {e}") from None
        (param_len,) = r.unpack("<I")
        sub = _Reader(r.take(param_len))
        try:
            params = _decode_params(kind, name, sub)
            if not sub.done():
                raise ModelFormatError(f"layer {name!r}: {len(sub.buf) - sub.pos} trailing param bytes")
            layers.append(LayerSpec(kind=kind, name=name, params=params))
        except ModelFormatError:
            raise
        except CoopNetError as e:
            raise ModelFormatError(f"layer {name!r}: invalid parameters: {e}") from None
    try:
        shape = Shape(c, h, w)
        return ModelGraph(layers=tuple(layers), input_shape=shape, num_classes=num_classes, arm=_ARM_NAMES[code])
    except ShapeChainError:
        raise
    except CoopNetError as e:
        raise ModelFormatError(f"invalid arm header: {e}") from None


def model_bytes(m: CoopModel) -> bytes:
    """Canonical serialization: identical models produce identical bytes."""
    body = bytearray()
    body += MAGIC
    body += struct.pack("<HBB", FORMAT_VERSION, 2, 0)
    body += _encode_arm(m.bnn)
    body += _encode_arm(m.int8)
    labels = m.class_labels or ()
    body += struct.pack("<H", len(labels))
    for label in labels:
        enc = label.encode()
        if len(enc) > 255:
            raise ModelFormatError("class label longer than 255 bytes")
        body += struct.pack("<B", len(enc)) + enc
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    return bytes(body)


def save(m: CoopModel, destination) -> int:
    """Write the canonical .cpnt bytes; returns the byte count."""
    data = model_bytes(m)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def load(source) -> CoopModel:
    """Load and fully validate a .cpnt file (path, file-like, or bytes)."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()

    if len(data) < len(MAGIC) + 4 + 4:
        raise ChecksumError(f"file too short ({len(data)} bytes), likely truncated")
    if data[:4] != MAGIC:
        raise MagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format version {version}")
    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ChecksumError(f"crc mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}")

    r = _Reader(data[8 : len(data) - 4])
    arm_count, reserved = struct.unpack_from("<BB", data, 6)
    if arm_count != 2:
        raise ModelFormatError(f"expected 2 arms, file declares {arm_count}")
    first = _decode_arm(r)
    second = _decode_arm(r)
    if first.arm != ARM_BNN or second.arm != ARM_INT8:
        raise ModelFormatError("arms out of canonical order (bnn arm must precede int8 arm)")
    (label_count,) = r.unpack("<H")
    labels = []
    for _ in range(label_count):
        (n,) = r.unpack("<B")
        try:
            labels.append(r.take(n).decode())
        except UnicodeDecodeError as e:
            raise ModelFormatError(f"class label is not valid utf-8: {e}") from None
    if not r.done():
        raise ModelFormatError(f"{len(r.buf) - r.pos} trailing bytes before checksum")
    try:
        return CoopModel(bnn=first, int8=second, class_labels=tuple(labels) or None)
    except ShapeChainError:
        raise
    except CoopNetError as e:
        raise ModelFormatError(f"inconsistent arms: {e}") from None


def inspect_text(m: CoopModel) -> str:
    """Human-readable rendering (non-contractual)."""
    lines = [
        f"input shape : {m.input_shape.as_tuple()}",
        f"classes     : {m.num_classes}"
        + (f" ({', '.join(m.class_labels)})" if m.class_labels else ""),
    ]
    for graph in (m.bnn, m.int8):
        lines.append(f"[{graph.arm} arm] {len(graph.layers)} layers")
        shape, value = graph.input_shape, "int8"
        for layer in graph.layers:
            shape, value = _next_shape(layer, shape, value)
            detail = ""
            p = layer.params
            if layer.kind == KIND_CONV_INT8:
                detail = f"{p.filters}x{p.in_channels}x{p.kh}x{p.kw} pad={p.pad} stride={p.stride} shift={p.out_scale_shift} acc={p.acc_mode}"
            elif layer.kind == KIND_FC_INT8:
                detail = f"{p.out_features}x{p.in_features} shift={p.out_scale_shift} acc={p.acc_mode}"
            elif layer.kind == KIND_MAXPOOL:
                detail = f"k={p.k} stride={p.stride}"
            elif layer.kind == KIND_BINCONV_FUSED:
                detail = f"{p.conv.filters}x{p.conv.in_channels}x{p.conv.kh}x{p.conv.kw} n={p.conv.n_effective}"
            elif layer.kind == KIND_BINACT_BRIDGE:
                detail = f"{p.channels} channels"
            lines.append(f"  {layer.name:<16} {layer.kind:<14} -> {shape.as_tuple()} [{value}] {detail}".rstrip())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# builders for the three benchmark topologies


def _rand_conv(rng, name, filters, in_c, k, pad, shift=7):
    weights = QuantTensor(Shape(filters * in_c, k, k), rng.integers(-8, 9, size=filters * in_c * k * k), -7)
    bias = rng.integers(-(2**10), 2**10, size=filters).astype(np.int32)
    return LayerSpec(
        KIND_CONV_INT8,
        name,
        Int8ConvParams(weights=weights, bias=bias, stride=1, pad=pad, out_scale_shift=shift),
    )


def _rand_fc(rng, name, out_f, in_f, shift=7):
    weights = QuantTensor(Shape(out_f, in_f, 1), rng.integers(-8, 9, size=out_f * in_f), -7)
    bias = rng.integers(-(2**10), 2**10, size=out_f).astype(np.int32)
    return LayerSpec(KIND_FC_INT8, name, Int8FcParams(weights=weights, bias=bias, out_scale_shift=shift))


def _rand_binconv(rng, name, filters, in_c, k):
    n_eff = in_c * k * k
    weights = pack_bits(rng.integers(0, 2, size=filters * n_eff), Shape(filters * in_c, k, k), "weight")
    conv = BinConvParams(
        weights=weights,
        alpha=rng.integers(1, 33, size=filters),
        alpha_scale_exp=-7,
        stride=1,
        n_effective=n_eff,
    )
    act = BinActParams(
        c_threshold=rng.integers(-20, 21, size=filters),
        c_scale_exp=0,
        direction=rng.integers(0, 2, size=filters),
    )
    return LayerSpec(KIND_BINCONV_FUSED, name, BinConvFusedParams(conv=conv, act=act))


def _rand_bridge(rng, name, channels):
    act = BinActParams(
        c_threshold=rng.integers(-64, 65, size=channels),
        c_scale_exp=-9,
        direction=np.zeros(channels, np.uint8),
    )
    return LayerSpec(KIND_BINACT_BRIDGE, name, act)


def _pool(name, k=2, stride=2):
    return LayerSpec(KIND_MAXPOOL, name, PoolParams(k, stride))


def _relu(name):
    return LayerSpec(KIND_RELU, name)


def _head(name):
    return LayerSpec(KIND_SOFTMAX_HEAD, name)


def build_caffenet(seed: int = 2001) -> CoopModel:
    """CIFAR-10 benchmark pair: CONV 32/32/64 @5x5 + FC 1024x10 on 3x32x32.

    The int8 arm pads 5x5 convs by 2 and pools after every conv stage so the
    final feature map is 64x4x4 = 1024, matching the FC row. The bnn arm keeps
    the first conv and the FC in int8; its binary convs run valid-only, so the
    recorded structure (not the published table) is authoritative for shapes.
    """
    rng = np.random.default_rng(seed)
    int8_arm = ModelGraph(
        layers=(
            _rand_conv(rng, "int8/conv1", 32, 3, 5, pad=2),
            _relu("int8/relu1"),
            _pool("int8/pool1"),
            _rand_conv(rng, "int8/conv2", 32, 32, 5, pad=2),
            _relu("int8/relu2"),
            _pool("int8/pool2"),
            _rand_conv(rng, "int8/conv3", 64, 32, 5, pad=2),
            _relu("int8/relu3"),
            _pool("int8/pool3"),
            _rand_fc(rng, "int8/fc", 10, 1024),
            _head("int8/softmax"),
        ),
        input_shape=Shape(3, 32, 32),
        num_classes=10,
        arm=ARM_INT8,
    )
    bnn_arm = ModelGraph(
        layers=(
            _rand_conv(rng, "bnn/conv1", 32, 3, 5, pad=2),
            _pool("bnn/pool1"),
            _rand_bridge(rng, "bnn/bridge", 32),
            _rand_binconv(rng, "bnn/binconv2", 32, 32, 5),
            _pool("bnn/pool2"),
            _rand_binconv(rng, "bnn/binconv3", 64, 32, 5),
            _pool("bnn/pool3"),
            _rand_fc(rng, "bnn/fc", 10, 64),
            _head("bnn/softmax"),
        ),
        input_shape=Shape(3, 32, 32),
        num_classes=10,
        arm=ARM_BNN,
    )
    return CoopModel(bnn=bnn_arm, int8=int8_arm)


def build_gscnet(seed: int = 2002) -> CoopModel:
    """Keyword-spotting pair: CONV 32/32/64/64 @5x5 + FC 1024x31 on 1x32x32.

    Pools follow the first three convs only, leaving 64x4x4 = 1024 for the FC.
    """
    rng = np.random.default_rng(seed)
    int8_arm = ModelGraph(
        layers=(
            _rand_conv(rng, "int8/conv1", 32, 1, 5, pad=2),
            _relu("int8/relu1"),
            _pool("int8/pool1"),
            _rand_conv(rng, "int8/conv2", 32, 32, 5, pad=2),
            _relu("int8/relu2"),
            _pool("int8/pool2"),
            _rand_conv(rng, "int8/conv3", 64, 32, 5, pad=2),
            _relu("int8/relu3"),
            _pool("int8/pool3"),
            _rand_conv(rng, "int8/conv4", 64, 64, 5, pad=2),
            _relu("int8/relu4"),
            _rand_fc(rng, "int8/fc", 31, 1024),
            _head("int8/softmax"),
        ),
        input_shape=Shape(1, 32, 32),
        num_classes=31,
        arm=ARM_INT8,
    )
    bnn_arm = ModelGraph(
        layers=(
            _rand_conv(rng, "bnn/conv1", 32, 1, 5, pad=2),
            _pool("bnn/pool1"),
            _rand_bridge(rng, "bnn/bridge", 32),
            _rand_binconv(rng, "bnn/binconv2", 32, 32, 5),
            _pool("bnn/pool2"),
            _rand_binconv(rng, "bnn/binconv3", 64, 32, 5),
            _pool("bnn/pool3"),
            _rand_fc(rng, "bnn/fc", 31, 64),
            _head("bnn/softmax"),
        ),
        input_shape=Shape(1, 32, 32),
        num_classes=31,
        arm=ARM_BNN,
    )
    return CoopModel(bnn=bnn_arm, int8=int8_arm)


def build_fernet(seed: int = 2003) -> CoopModel:
    """Facial-expression pair: 3x CONV32, 3x CONV64, 3x CONV128 @3x3 + FC 128x7
    on 1x44x44, pooling after each conv group plus a global pool before the FC.

    The bnn arm realizes the group structure with valid-only binary convs
    (2x32, 3x64, 1x128) — the deepest stack that still reaches a 1x1 map.
    """
    rng = np.random.default_rng(seed)
    int8_layers = [_rand_conv(rng, "int8/conv1", 32, 1, 3, pad=1), _relu("int8/relu1")]
    int8_layers += [_rand_conv(rng, "int8/conv2", 32, 32, 3, pad=1), _relu("int8/relu2")]
    int8_layers += [_rand_conv(rng, "int8/conv3", 32, 32, 3, pad=1), _relu("int8/relu3"), _pool("int8/pool1")]
    for i, (f, c) in enumerate([(64, 32), (64, 64), (64, 64)], start=4):
        int8_layers += [_rand_conv(rng, f"int8/conv{i}", f, c, 3, pad=1), _relu(f"int8/relu{i}")]
    int8_layers.append(_pool("int8/pool2"))
    for i, (f, c) in enumerate([(128, 64), (128, 128), (128, 128)], start=7):
        int8_layers += [_rand_conv(rng, f"int8/conv{i}", f, c, 3, pad=1), _relu(f"int8/relu{i}")]
    int8_layers.append(_pool("int8/pool3"))
    int8_layers.append(_pool("int8/gpool", k=5, stride=5))
    int8_layers.append(_rand_fc(rng, "int8/fc", 7, 128))
    int8_layers.append(_head("int8/softmax"))
    int8_arm = ModelGraph(
        layers=tuple(int8_layers), input_shape=Shape(1, 44, 44), num_classes=7, arm=ARM_INT8
    )
    bnn_arm = ModelGraph(
        layers=(
            _rand_conv(rng, "bnn/conv1", 32, 1, 3, pad=1),
            _pool("bnn/pool1"),
            _rand_bridge(rng, "bnn/bridge", 32),
            _rand_binconv(rng, "bnn/binconv2", 32, 32, 3),
            _rand_binconv(rng, "bnn/binconv3", 32, 32, 3),
            _pool("bnn/pool2"),
            _rand_binconv(rng, "bnn/binconv4", 64, 32, 3),
            _rand_binconv(rng, "bnn/binconv5", 64, 64, 3),
            _rand_binconv(rng, "bnn/binconv6", 64, 64, 3),
            _rand_binconv(rng, "bnn/binconv7", 128, 64, 3),
            _rand_fc(rng, "bnn/fc", 7, 128),
            _head("bnn/softmax"),
        ),
        input_shape=Shape(1, 44, 44),
        num_classes=7,
        arm=ARM_BNN,
    )
    return CoopModel(bnn=bnn_arm, int8=int8_arm)
