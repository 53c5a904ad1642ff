"""Single-arm graph execution.

Value flow through a graph is typed: quantized int8 maps, bit-packed binary
maps, then float32 logits/probabilities at the classifier head. Two implicit
conversions keep the graphs composable:

* a BitTensor feeding an int8 layer becomes bipolar int8 (bit b -> 2b-1 at
  scale 2^0), which is the value the bit encodes;
* the parameterized layer directly before softmax_head runs in logit mode:
  its raw integer accumulators are dequantized by 2^(x_scale + w_scale) into
  float32 logits, never squeezed back through int8.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bnn import binact, binconv_thresholded, maxpool_bits
from .errors import ShapeError
from .floatref import softmax_ref
from .int8 import conv2d_int8, conv2d_int8_acc, fc_int8, fc_int8_acc, maxpool_int8, relu_int8
from .modelfile import (
    KIND_BINACT_BRIDGE,
    KIND_BINCONV_FUSED,
    KIND_CONV_INT8,
    KIND_FC_INT8,
    KIND_MAXPOOL,
    KIND_RELU,
    KIND_SOFTMAX_HEAD,
    ModelGraph,
)
from .tensors import BitTensor, FloatTensor, QuantTensor, Shape, bipolar, dequantize

INPUT_SCALE_EXP = -7  # u8 pixel p maps to int8 (p - 128) on the [-1, 1) grid


def quantize_input(pixels: np.ndarray, shape: Shape) -> QuantTensor:
    """u8 image -> int8 input tensor under the documented pixel convention."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise ShapeError(f"expected u8 pixels, got {arr.dtype}")
    if arr.size != shape.count:
        raise ShapeError(f"input has {arr.size} pixels, model expects {shape.as_tuple()}")
    data = (arr.astype(np.int16) - 128).astype(np.int8)
    return QuantTensor(shape, data, INPUT_SCALE_EXP)


def _to_int8_operand(value) -> QuantTensor:
    if isinstance(value, QuantTensor):
        return value
    if isinstance(value, BitTensor):
        return QuantTensor(value.shape, bipolar(value), 0)
    raise ShapeError(f"int8 layer cannot consume {type(value).__name__}")


@dataclass(frozen=True)
class ArmOutput:
    probs: np.ndarray
    logits: np.ndarray
    trace: Optional[tuple] = None


def run_arm(graph: ModelGraph, x: QuantTensor, trace: bool = False) -> ArmOutput:
    """Execute one arm on a quantized input; optionally record per-layer outputs."""
    if x.shape != graph.input_shape:
        raise ShapeError(f"input {x.shape.as_tuple()} does not match arm input {graph.input_shape.as_tuple()}")
    value = x
    recorded = []
    logits = None
    for i, layer in enumerate(graph.layers):
        p = layer.params
        head_next = i + 1 < len(graph.layers) and graph.layers[i + 1].kind == KIND_SOFTMAX_HEAD
        if layer.kind == KIND_CONV_INT8:
            xq = _to_int8_operand(value)
            if head_next:
                acc = conv2d_int8_acc(xq, p)
                scale = 2.0 ** (xq.scale_exp + p.weights.scale_exp)
                value = FloatTensor(Shape(*acc.shape), (acc.astype(np.float64) * scale).astype(np.float32))
            else:
                value = conv2d_int8(xq, p)
        elif layer.kind == KIND_FC_INT8:
            xq = _to_int8_operand(value)
            if head_next:
                acc = fc_int8_acc(xq, p)
                scale = 2.0 ** (xq.scale_exp + p.weights.scale_exp)
                value = FloatTensor(Shape(acc.size), (acc.astype(np.float64) * scale).astype(np.float32))
            else:
                value = fc_int8(xq, p)
        elif layer.kind == KIND_MAXPOOL:
            if isinstance(value, BitTensor):
                value = maxpool_bits(value, p.k, p.stride)
            else:
                value = maxpool_int8(value, p.k, p.stride)
        elif layer.kind == KIND_RELU:
            value = relu_int8(value)
        elif layer.kind == KIND_BINACT_BRIDGE:
            value = binact(dequantize(value), p)
        elif layer.kind == KIND_BINCONV_FUSED:
            if not isinstance(value, BitTensor):
                raise ShapeError(f"layer {layer.name!r} expects a binary input")
            value = binconv_thresholded(value, p.conv, p.act)
        elif layer.kind == KIND_SOFTMAX_HEAD:
            if isinstance(value, FloatTensor):
                logits = value.flat().copy()
            else:
                logits = dequantize(value).flat().copy()
            value = FloatTensor(Shape(logits.size), softmax_ref(logits))
        if trace:
            recorded.append((layer.name, value))
    probs = value.flat().copy()
    return ArmOutput(probs=probs, logits=logits, trace=tuple(recorded) if trace else None)
