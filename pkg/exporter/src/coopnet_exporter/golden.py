"""Golden-vector container (.cpgv): per-sample, per-layer reference outputs."""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .cpnt import pack_words

_DTYPE_CODES = {"f32": 0, "i8": 1, "bits": 2, "i32": 3}
_DTYPE_NAMES = {v: k for k, v in _DTYPE_CODES.items()}
_ARM_CODES = {"bnn": 0, "int8": 1, "input": 2}
_ARM_NAMES = {v: k for k, v in _ARM_CODES.items()}


@dataclass(frozen=True)
class GoldenRecord:
    sample: int
    arm: str  # "bnn", "int8", or "input"
    name: str
    dtype: str  # "f32", "i8", "bits", "i32"
    shape: tuple
    scale_exp: int
    payload: np.ndarray  # bits arrive/leave as packed u32 words


def _payload_bytes(rec: GoldenRecord) -> bytes:
    if rec.dtype == "f32":
        return rec.payload.astype("<f4").tobytes()
    if rec.dtype == "i8":
        return rec.payload.astype("<i1").tobytes()
    if rec.dtype == "i32":
        return rec.payload.astype("<i4").tobytes()
    return rec.payload.astype("<u4").tobytes()


def bits_record(sample: int, arm: str, name: str, bits_chw: np.ndarray) -> GoldenRecord:
    words = pack_words(bits_chw.reshape(-1), pad_value=0)
    return GoldenRecord(sample, arm, name, "bits", tuple(bits_chw.shape), 0, words)


def write_golden(records: list, path) -> bytes:
    body = b"CPGV" + struct.pack("<HH", 1, 0) + struct.pack("<I", len(records))
    for rec in records:
        c, h, w = (tuple(rec.shape) + (1, 1, 1))[:3]
        name = rec.name.encode()
        payload = _payload_bytes(rec)
        body += struct.pack("<HBBB", rec.sample, _ARM_CODES[rec.arm], _DTYPE_CODES[rec.dtype], len(name))
        body += name
        body += struct.pack("<bBIII", rec.scale_exp, 0, c, h, w)
        body += struct.pack("<I", len(payload)) + payload
    data = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_golden(path) -> list:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != b"CPGV":
        raise ValueError(f"bad golden magic {data[:4]!r}")
    (version, _), (count,) = struct.unpack_from("<HH", data, 4), struct.unpack_from("<I", data, 8)
    if version != 1:
        raise ValueError(f"unsupported golden version {version}")
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != struct.unpack_from("<I", data, len(data) - 4)[0]:
        raise ValueError("golden file checksum mismatch")
    pos = 12
    records = []
    for _ in range(count):
        sample, arm_code, dtype_code, name_len = struct.unpack_from("<HBBB", data, pos)
        pos += 5
        name = data[pos : pos + name_len].decode()
        pos += name_len
        scale_exp, _, c, h, w = struct.unpack_from("<bBIII", data, pos)
        pos += 14
        (payload_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        raw = data[pos : pos + payload_len]
        pos += payload_len
        dtype = _DTYPE_NAMES[dtype_code]
        arr = np.frombuffer(raw, {"f32": "<f4", "i8": "<i1", "i32": "<i4", "bits": "<u4"}[dtype])
        records.append(GoldenRecord(sample, _ARM_NAMES[arm_code], name, dtype, (c, h, w), scale_exp, arr))
    return records
