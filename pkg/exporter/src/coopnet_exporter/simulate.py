"""Reference integer simulation of exported models.

This is the exporter's own execution of the quantized graphs, written against
the engine's FORMAT.md semantics but sharing no code with the engine. Golden
vectors come from here; the engine must reproduce them (int8 layers within
one LSB, binary layers bit for bit).

Layer specs are plain dicts as produced by export.py; arrays stay unpacked
internally (bits as {0,1} uint8 maps) and are packed only at the file
boundary.
"""

import numpy as np

from .quantize import round_half_away


def _requantize(acc: np.ndarray, shift: int) -> np.ndarray:
    v = acc.astype(np.float64) / float(1 << shift)
    return np.clip(round_half_away(v), -128, 127).astype(np.int8)


def _conv_acc(x: np.ndarray, w4: np.ndarray, bias: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Kernel-position accumulation: out[f] = sum_ky,kx W[f,:,ky,kx] . shifted x."""
    c, h, wd = x.shape
    f, _, kh, kw = w4.shape
    padded = np.zeros((c, h + 2 * pad, wd + 2 * pad), dtype=np.int64)
    padded[:, pad : pad + h, pad : pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    acc = np.broadcast_to(bias.astype(np.int64)[:, None, None], (f, oh, ow)).copy()
    for ky in range(kh):
        for kx in range(kw):
            xs = padded[:, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
            acc += np.tensordot(w4[:, :, ky, kx].astype(np.int64), xs.astype(np.int64), axes=(1, 0))
    return acc


def _maxpool(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    c, h, w = x.shape
    assert k == stride and h % k == 0 and w % k == 0, "simulator pools are aligned"
    return x.reshape(c, h // k, k, w // k, k).max(axis=(2, 4))


def _softmax_f32(logits: np.ndarray) -> np.ndarray:
    v = logits.astype(np.float32)
    e = np.exp(v - v.max(), dtype=np.float32)
    return (e / e.sum(dtype=np.float32)).astype(np.float32)


def quantize_input_u8(img_u8: np.ndarray) -> np.ndarray:
    return (img_u8.astype(np.int16) - 128).astype(np.int8)


def sim_arm(arm: dict, img_u8: np.ndarray, record: bool = False):
    """Run one arm on a u8 image; returns (probs, trace).

    Trace entries are (layer_name, tag, array, scale_exp) with tag one of
    "i8", "bits", "i32", "f32"; arrays keep their logical (c, h, w) or flat
    shape, bits stay unpacked {0,1}.
    """
    x = quantize_input_u8(img_u8)
    x_exp = -7
    kind_of_value = "i8"
    trace = []
    layers = arm["layers"]
    probs = None
    for i, spec in enumerate(layers):
        kind = spec["kind"]
        head_next = i + 1 < len(layers) and layers[i + 1]["kind"] == "softmax_head"
        if kind == "conv_int8" or kind == "fc_int8":
            if kind_of_value == "bits":
                x = (2 * x.astype(np.int8) - 1).astype(np.int8)
                x_exp = 0
            if kind == "conv_int8":
                w4 = spec["weights"].reshape(spec["filters"], spec["in_c"], spec["kh"], spec["kw"])
                acc = _conv_acc(x, w4, spec["bias"], spec["stride"], spec["pad"])
            else:
                wmat = spec["weights"].reshape(spec["out"], spec["in"]).astype(np.int64)
                acc = wmat @ x.reshape(-1).astype(np.int64) + spec["bias"].astype(np.int64)
            if head_next:
                x = acc
                x_exp = x_exp + spec["w_exp"]
                kind_of_value = "i32"
                trace.append((spec["name"], "i32", acc.astype(np.int32), x_exp))
            else:
                x = _requantize(acc, spec["shift"])
                x_exp = x_exp + spec["w_exp"] + spec["shift"]
                kind_of_value = "i8"
                trace.append((spec["name"], "i8", x, x_exp))
        elif kind == "relu":
            x = np.maximum(x, 0)
            trace.append((spec["name"], "i8", x, x_exp))
        elif kind == "maxpool":
            x = _maxpool(x, spec["k"], spec["stride"])
            trace.append((spec["name"], kind_of_value, x, x_exp))
        elif kind == "binact_bridge":
            real = x.astype(np.float64) * 2.0**x_exp
            c = spec["c"].astype(np.float64)[:, None, None] * 2.0 ** spec["cse"]
            ge = real >= c
            le = real <= c
            x = np.where((spec["dir"] == 0)[:, None, None], ge, le).astype(np.uint8)
            kind_of_value = "bits"
            trace.append((spec["name"], "bits", x, 0))
        elif kind == "binconv_fused":
            bipolar = (2 * x.astype(np.int64) - 1)
            w_bits = spec["bits"].reshape(spec["filters"], spec["in_c"], spec["kh"], spec["kw"])
            w_bipolar = 2 * w_bits.astype(np.int64) - 1
            d = _conv_acc(bipolar, w_bipolar, np.zeros(spec["filters"], np.int64), spec["stride"], 0)
            pre = spec["alpha"].astype(np.float64)[:, None, None] * 2.0 ** spec["ase"] * d
            c = spec["c"].astype(np.float64)[:, None, None] * 2.0 ** spec["cse"]
            ge = pre >= c
            le = pre <= c
            x = np.where((spec["dir"] == 0)[:, None, None], ge, le).astype(np.uint8)
            kind_of_value = "bits"
            trace.append((spec["name"], "bits", x, 0))
        elif kind == "softmax_head":
            logits = (x.astype(np.float64) * 2.0**x_exp).astype(np.float32).reshape(-1)
            probs = _softmax_f32(logits)
            kind_of_value = "f32"
            trace.append((spec["name"], "f32", probs, 0))
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return probs, (trace if record else None)


def sim_predict(arm: dict, images_u8: np.ndarray) -> np.ndarray:
    out = np.empty(images_u8.shape[0], dtype=np.int64)
    for i in range(images_u8.shape[0]):
        probs, _ = sim_arm(arm, images_u8[i])
        out[i] = int(np.argmax(probs))
    return out
