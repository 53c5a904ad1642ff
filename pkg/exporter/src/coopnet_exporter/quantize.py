"""Post-training quantization to the engine's fixed-point scheme.

Everything maps onto power-of-two grids: value = int8 * 2**exp, rounding
half away from zero. Exponents are picked per tensor/table as the finest grid
on which the largest magnitude still rounds into int8.
"""

import numpy as np


def round_half_away(v):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def pick_exponent(values, lo: int = -31, hi: int = 0) -> int:
    """Smallest e in [lo, hi] with round(max|v| / 2**e) <= 127."""
    peak = float(np.max(np.abs(np.asarray(values, dtype=np.float64)), initial=0.0))
    e = lo
    while e < hi and round_half_away(peak / 2.0**e) > 127:
        e += 1
    return e


def to_int8(values, exp: int) -> np.ndarray:
    return np.clip(round_half_away(np.asarray(values, dtype=np.float64) / 2.0**exp), -128, 127).astype(np.int8)


def to_int32(values) -> np.ndarray:
    return np.clip(round_half_away(values), -(2**31), 2**31 - 1).astype(np.int32)


def fuse_bn(bn) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel sign thresholds from trained batch-norm statistics.

    bn(x) >= 0 collapses to x >= c for positive gamma and x <= c otherwise,
    with c = mu - beta/gamma * sqrt(var + eps).
    """
    mu = bn.running_mean.detach().numpy().astype(np.float64)
    var = bn.running_var.detach().numpy().astype(np.float64)
    gamma = bn.weight.detach().numpy().astype(np.float64)
    beta = bn.bias.detach().numpy().astype(np.float64)
    if np.any(gamma == 0):
        raise ValueError("batch-norm gamma hit zero; cannot fuse a threshold")
    c = mu - beta / gamma * np.sqrt(var + bn.eps)
    direction = np.where(gamma > 0, 0, 1).astype(np.uint8)  # 0: x>=c, 1: x<=c
    return c, direction


def quantize_threshold_table(c: np.ndarray) -> tuple[np.ndarray, int]:
    exp = pick_exponent(c, lo=-31, hi=8)
    return to_int8(c, exp), exp
