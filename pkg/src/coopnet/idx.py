"""IDX tensor files (the MNIST-style container): big-endian dims, raw payload.

Magic is 4 bytes: 0x00, 0x00, dtype code, ndim. u8 images are 0x00000803
(N, H, W) or 0x00000804 (N, C, H, W); labels are 0x00000801.
"""

import struct

import numpy as np

from .errors import DatasetError

_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODES = {v.newbyteorder("="): k for k, v in _DTYPES.items()}


def read_idx(path) -> np.ndarray:
    if hasattr(path, "read"):
        data = path.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    if len(data) < 4:
        raise DatasetError("IDX file shorter than its magic")
    zero, zero2, dtype_code, ndim = struct.unpack_from(">BBBB", data, 0)
    if zero or zero2:
        raise DatasetError(f"bad IDX magic {data[:4].hex()}")
    if dtype_code not in _DTYPES:
        raise DatasetError(f"unknown IDX dtype code {dtype_code:#04x}")
    if len(data) < 4 + 4 * ndim:
        raise DatasetError("IDX header truncated")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    dtype = _DTYPES[dtype_code]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = data[4 + 4 * ndim :]
    if len(payload) != count * dtype.itemsize:
        raise DatasetError(
            f"IDX payload is {len(payload)} bytes, expected {count * dtype.itemsize} for dims {dims}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return arr.astype(dtype.newbyteorder("="))


def write_idx(arr: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(arr)
    code = _CODES.get(arr.dtype)
    if code is None:
        raise DatasetError(f"dtype {arr.dtype} has no IDX code")
    header = struct.pack(">BBBB", 0, 0, code, arr.ndim) + struct.pack(f">{arr.ndim}I", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder(">")).tobytes()
    if hasattr(path, "write"):
        path.write(header + payload)
    else:
        with open(path, "wb") as fh:
            fh.write(header + payload)


def load_images(path) -> np.ndarray:
    """u8 image stack as (N, C, H, W); 3-dim files load as single-channel."""
    arr = read_idx(path)
    if arr.dtype != np.uint8:
        raise DatasetError(f"image file must hold unsigned bytes, got {arr.dtype}")
    if arr.ndim == 3:
        return arr[:, None, :, :]
    if arr.ndim == 4:
        return arr
    raise DatasetError(f"image file must be 3- or 4-dimensional, got {arr.ndim}")


def load_labels(path) -> np.ndarray:
    arr = read_idx(path)
    if arr.ndim != 1:
        raise DatasetError(f"label file must be 1-dimensional, got {arr.ndim}")
    return arr.astype(np.int64)
