"""Independent .cpnt writer, built from the engine's FORMAT.md alone."""

import struct
import zlib

import numpy as np

_KIND_CODES = {
    "conv_int8": 1,
    "fc_int8": 2,
    "maxpool": 3,
    "relu": 4,
    "binconv_fused": 5,
    "binact_bridge": 6,
    "softmax_head": 7,
}
_ARM_CODES = {"bnn": 0, "int8": 1}


def pack_words(bits: np.ndarray, pad_value: int) -> np.ndarray:
    """{0,1} sequence -> u32 words, bit i at position i%32 of word i//32."""
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    n_words = (bits.size + 31) // 32
    padded = np.full(n_words * 32, pad_value, dtype=np.uint64)
    padded[: bits.size] = bits
    weights = np.uint64(1) << np.arange(32, dtype=np.uint64)
    return (padded.reshape(-1, 32) * weights).sum(axis=1).astype(np.uint32)


def _param_block(spec: dict) -> bytes:
    kind = spec["kind"]
    if kind == "conv_int8":
        head = struct.pack(
            "<HHBBBBBBbB",
            spec["filters"], spec["in_c"], spec["kh"], spec["kw"],
            spec["stride"], spec["pad"], 0, spec["shift"], spec["w_exp"], 0,
        )
        return head + spec["weights"].astype("<i1").tobytes() + spec["bias"].astype("<i4").tobytes()
    if kind == "fc_int8":
        head = struct.pack("<IIBBbB", spec["out"], spec["in"], 0, spec["shift"], spec["w_exp"], 0)
        return head + spec["weights"].astype("<i1").tobytes() + spec["bias"].astype("<i4").tobytes()
    if kind == "maxpool":
        return struct.pack("<BB", spec["k"], spec["stride"])
    if kind == "binconv_fused":
        head = struct.pack(
            "<HHBBBBbb",
            spec["filters"], spec["in_c"], spec["kh"], spec["kw"],
            spec["stride"], 0, spec["ase"], spec["cse"],
        )
        words = pack_words(spec["bits"], pad_value=1)
        return (
            head
            + spec["alpha"].astype("<i1").tobytes()
            + spec["c"].astype("<i1").tobytes()
            + spec["dir"].astype("<u1").tobytes()
            + struct.pack("<I", words.size)
            + words.astype("<u4").tobytes()
        )
    if kind == "binact_bridge":
        head = struct.pack("<HbB", spec["channels"], spec["cse"], 0)
        return head + spec["c"].astype("<i1").tobytes() + spec["dir"].astype("<u1").tobytes()
    return b""  # relu, softmax_head


def _arm_record(arm: dict) -> bytes:
    c, h, w = arm["input_shape"]
    out = struct.pack("<BIIII", _ARM_CODES[arm["arm"]], c, h, w, arm["num_classes"])
    out += struct.pack("<H", len(arm["layers"]))
    for spec in arm["layers"]:
        name = spec["name"].encode()
        block = _param_block(spec)
        out += struct.pack("<BB", _KIND_CODES[spec["kind"]], len(name)) + name
        out += struct.pack("<I", len(block)) + block
    return out


def write_cpnt(bnn_arm: dict, int8_arm: dict, path, labels=()) -> bytes:
    body = b"CPNT" + struct.pack("<HBB", 1, 2, 0)
    body += _arm_record(bnn_arm)
    body += _arm_record(int8_arm)
    body += struct.pack("<H", len(labels))
    for label in labels:
        enc = str(label).encode()
        body += struct.pack("<B", len(enc)) + enc
    data = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(data)
    return data
