"""Analytical latency and RAM models for MCU deployment planning.

Latency: an arm's latency is the sum of its per-layer microsecond costs taken
from a profile (measured on-device in the intended deployment; synthetic
here). A cascade sample costs l_bnn + l_cs when the binary arm's answer is
accepted and l_bnn + l_cs + l_int8 when it escalates; batch latency is the sum
of per-sample costs.

RAM: per arm, weights buffer + activations buffer + im2col buffer.

* weights: 1 byte per int8 weight + 4 per bias; binary filters cost
  ceil(n_eff/8) bytes each plus one alpha byte and one threshold byte.
* activations: ping-pong double buffering — two scratch buffers, each sized
  to the largest feature map of the arm at that map's own precision.
* im2col: one unrolled patch row, largest over the arm's conv layers.

The combined footprint is additive over the two arms.
"""

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import NumericError, ProfileError
from .modelfile import (
    KIND_BINACT_BRIDGE,
    KIND_BINCONV_FUSED,
    KIND_CONV_INT8,
    KIND_FC_INT8,
    KIND_MAXPOOL,
    KIND_RELU,
    KIND_SOFTMAX_HEAD,
    CoopModel,
    ModelGraph,
    _next_shape,
)


def _as_microseconds(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProfileError(f"{what} must be an integer microsecond count, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ProfileError(f"{what} must be a whole number of microseconds, got {value!r}")
    v = int(value)
    if v < 0:
        raise ProfileError(f"{what} must be non-negative, got {v}")
    return v


@dataclass(frozen=True)
class LatencyProfile:
    """Per-layer latency table plus the confidence-score overhead, integer µs."""

    layers: Mapping[str, int]
    l_cs: int

    def __post_init__(self):
        clean = {}
        for name, v in dict(self.layers).items():
            clean[str(name)] = _as_microseconds(v, f"latency of layer {name!r}")
        object.__setattr__(self, "layers", clean)
        object.__setattr__(self, "l_cs", _as_microseconds(self.l_cs, "l_cs"))

    def to_dict(self) -> dict:
        return {"layers": dict(sorted(self.layers.items())), "l_cs": self.l_cs}


def load_profile(path) -> LatencyProfile:
    if hasattr(path, "read"):
        raw = json.load(path)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    if not isinstance(raw, dict) or "layers" not in raw or "l_cs" not in raw:
        raise ProfileError('profile JSON must be {"layers": {...}, "l_cs": n}')
    if not isinstance(raw["layers"], dict):
        raise ProfileError('"layers" must map layer names to microseconds')
    return LatencyProfile(layers=raw["layers"], l_cs=raw["l_cs"])


def save_profile(profile: LatencyProfile, path) -> None:
    text = json.dumps(profile.to_dict(), indent=2, sort_keys=True)
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def arm_latency(graph: ModelGraph, profile: LatencyProfile) -> int:
    """Sum of per-layer latencies; every layer must be present in the profile."""
    total = 0
    for layer in graph.layers:
        if layer.name not in profile.layers:
            raise ProfileError(f"profile has no entry for layer {layer.name!r}")
        total += profile.layers[layer.name]
    return total


def coopnet_latency(routed_to_int8: bool, l_bnn: int, l_int8: int, l_cs: int) -> int:
    """Per-sample cost: the escalation branch adds the int8 arm on top."""
    for name, v in (("l_bnn", l_bnn), ("l_int8", l_int8), ("l_cs", l_cs)):
        if v < 0:
            raise NumericError(f"{name} must be non-negative, got {v}")
    base = l_bnn + l_cs
    return base + l_int8 if routed_to_int8 else base


# ---------------------------------------------------------------------------
# memory model


@dataclass(frozen=True)
class ArmMemory:
    weights_bytes: int
    activations_bytes: int
    im2col_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.weights_bytes + self.activations_bytes + self.im2col_bytes

    def to_dict(self) -> dict:
        return {
            "weights_bytes": self.weights_bytes,
            "activations_bytes": self.activations_bytes,
            "im2col_bytes": self.im2col_bytes,
            "total_bytes": self.total_bytes,
        }


@dataclass(frozen=True)
class MemoryReport:
    bnn: ArmMemory
    int8: ArmMemory

    @property
    def combined(self) -> ArmMemory:
        return ArmMemory(
            weights_bytes=self.bnn.weights_bytes + self.int8.weights_bytes,
            activations_bytes=self.bnn.activations_bytes + self.int8.activations_bytes,
            im2col_bytes=self.bnn.im2col_bytes + self.int8.im2col_bytes,
        )

    @property
    def total_bytes(self) -> int:
        return self.bnn.total_bytes + self.int8.total_bytes

    def to_dict(self) -> dict:
        return {
            "bnn": self.bnn.to_dict(),
            "int8": self.int8.to_dict(),
            "combined": self.combined.to_dict(),
            "total_bytes": self.total_bytes,
        }


def _map_bytes(shape, value_kind: str) -> int:
    if value_kind == "bits":
        return (shape.count + 7) // 8
    if value_kind == "probs":
        return 4 * shape.count
    return shape.count  # int8: one byte per element


def binconv_weight_bytes(filters: int, n_effective: int) -> int:
    """Byte-granular per-filter bit rows plus the alpha and threshold tables."""
    return filters * ((n_effective + 7) // 8) + 2 * filters


def layer_weight_bytes(layer) -> int:
    p = layer.params
    if layer.kind == KIND_CONV_INT8:
        return p.weights.shape.count + 4 * p.filters
    if layer.kind == KIND_FC_INT8:
        return p.weights.shape.count + 4 * p.out_features
    if layer.kind == KIND_BINCONV_FUSED:
        return binconv_weight_bytes(p.conv.filters, p.conv.n_effective)
    if layer.kind == KIND_BINACT_BRIDGE:
        return p.channels  # threshold table
    return 0


def _layer_im2col_bytes(layer) -> int:
    p = layer.params
    if layer.kind == KIND_CONV_INT8:
        return p.in_channels * p.kh * p.kw
    if layer.kind == KIND_BINCONV_FUSED:
        return (p.conv.n_effective + 7) // 8
    return 0


def arm_memory(graph: ModelGraph) -> ArmMemory:
    weights = sum(layer_weight_bytes(l) for l in graph.layers)
    shape, value = graph.input_shape, "int8"
    peak_map = _map_bytes(shape, value)
    for layer in graph.layers:
        shape, value = _next_shape(layer, shape, value)
        peak_map = max(peak_map, _map_bytes(shape, value))
    im2col = max((_layer_im2col_bytes(l) for l in graph.layers), default=0)
    return ArmMemory(weights_bytes=weights, activations_bytes=2 * peak_map, im2col_bytes=im2col)


def memory_report(m: CoopModel) -> MemoryReport:
    return MemoryReport(bnn=arm_memory(m.bnn), int8=arm_memory(m.int8))


# ---------------------------------------------------------------------------
# synthetic profile (no hardware in the loop)

_INT8_MACS_PER_US = 250
_BIN_MACS_PER_US = 1000  # binary conv runs ~4x faster than int8 per MAC
_ELEMS_PER_US = 1000


def synthetic_profile(m: CoopModel) -> LatencyProfile:
    """Rough operation-count profile for desk experiments.

    Synthetic by construction: not measured on any device. Binary convolutions
    are modeled at one quarter of the int8 per-MAC cost.
    """
    layers = {}
    for graph in (m.bnn, m.int8):
        shape, value = graph.input_shape, "int8"
        for layer in graph.layers:
            in_shape = shape
            shape, value = _next_shape(layer, shape, value)
            p = layer.params
            if layer.kind == KIND_CONV_INT8:
                macs = p.filters * p.in_channels * p.kh * p.kw * shape.height * shape.width
                us = math.ceil(macs / _INT8_MACS_PER_US)
            elif layer.kind == KIND_FC_INT8:
                us = math.ceil(p.out_features * p.in_features / _INT8_MACS_PER_US)
            elif layer.kind == KIND_BINCONV_FUSED:
                macs = p.conv.filters * p.conv.n_effective * shape.height * shape.width
                us = math.ceil(macs / _BIN_MACS_PER_US)
            elif layer.kind in (KIND_MAXPOOL, KIND_RELU, KIND_BINACT_BRIDGE):
                us = math.ceil(in_shape.count / _ELEMS_PER_US)
            elif layer.kind == KIND_SOFTMAX_HEAD:
                us = 1
            else:
                us = 1
            layers[layer.name] = max(1, us)
    return LatencyProfile(layers=layers, l_cs=1)
