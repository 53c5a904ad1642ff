"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Oracles here are deliberately independent of the engine paths they
check: integer loop convolutions, float ±1 convolutions built from unpacked
bits, and direct two-pass routing recomputation.
"""

import struct
import time
import zlib

import numpy as np

from conftest import tiny_dataset, tiny_model
from coopnet.bnn import BinActParams, BinConvParams, binact, binconv2d, binconv_thresholded, fuse_batchnorm
from coopnet.cascade import CascadeConfig, evaluate_batch, sweep_ct
from coopnet.engine import quantize_input, run_arm
from coopnet.errors import ModelFormatError
from coopnet.floatref import batchnorm_ref
from coopnet.int8 import Int8ConvParams, conv2d_int8
from coopnet.modelfile import build_caffenet, load, model_bytes
from coopnet.perf import (
    arm_latency,
    binconv_weight_bytes,
    coopnet_latency,
    layer_weight_bytes,
    memory_report,
    synthetic_profile,
)
from coopnet.tensors import FloatTensor, QuantTensor, Shape, pack_bits, unpack_bits


def _report(name: str, detail: str = ""):
    print(f"PASS: {name}" + (f" ({detail})" if detail else ""))


# ---------------------------------------------------------------------------
# criterion 1: int8 kernel vs integer brute-force loop oracle


def _int_conv_oracle(x, w4, bias, stride, pad, shift):
    c, h, wd = x.shape
    n, _, kh, kw = w4.shape
    src = np.zeros((c, h + 2 * pad, wd + 2 * pad), dtype=np.int64)
    src[:, pad : pad + h, pad : pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, oh, ow), dtype=np.int8)
    half = 1 << (shift - 1) if shift else 0
    for f in range(n):
        wf = w4[f].astype(np.int64)
        for oy in range(oh):
            for ox in range(ow):
                win = src[:, oy * stride : oy * stride + kh, ox * stride : ox * stride + kw]
                acc = int(np.sum(win * wf)) + int(bias[f])
                if shift:
                    r = (abs(acc) + half) >> shift
                    r = r if acc >= 0 else -r
                else:
                    r = acc
                out[f, oy, ox] = max(-128, min(127, r))
    return out


def test_kernel_oracle_equivalence():
    rng = np.random.default_rng(0xC0FFEE)
    started = time.monotonic()
    cases = 0
    for _ in range(1000):
        c = int(rng.integers(1, 9))
        k = int(rng.integers(1, 6))
        h = int(rng.integers(k, 17))
        w = int(rng.integers(k, 17))
        filters = int(rng.integers(1, 7))
        stride = int(rng.integers(1, 3))
        pad = int(rng.integers(0, 3))
        shift = int(rng.integers(0, 15))
        x = QuantTensor(Shape(c, h, w), rng.integers(-128, 128, size=c * h * w), -7)
        weights = QuantTensor(Shape(filters * c, k, k), rng.integers(-128, 128, size=filters * c * k * k), -7)
        bias = rng.integers(-(2**16), 2**16, size=filters).astype(np.int32)
        params = Int8ConvParams(weights=weights, bias=bias, stride=stride, pad=pad, out_scale_shift=shift)
        got = conv2d_int8(x, params)
        expected = _int_conv_oracle(x.data.astype(np.int64), weights.data.reshape(filters, c, k, k), bias, stride, pad, shift)
        assert np.array_equal(got.data, expected), f"mismatch at case {cases}"
        cases += 1
    elapsed = time.monotonic() - started
    assert cases >= 1000
    assert elapsed < 30.0, f"oracle sweep took {elapsed:.1f}s"
    _report("kernel oracle equivalence", f"{cases} cases bit-exact in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: binary path exactness


def _bipolar_loop_oracle(x_bits, w_bits, alpha_real, stride):
    xs = (2.0 * x_bits - 1.0).astype(np.float64)
    ws = (2.0 * w_bits - 1.0).astype(np.float64)
    n, c, kh, kw = ws.shape
    oh = (xs.shape[1] - kh) // stride + 1
    ow = (xs.shape[2] - kw) // stride + 1
    out = np.zeros((n, oh, ow), dtype=np.float64)
    for f in range(n):
        for oy in range(oh):
            for ox in range(ow):
                win = xs[:, oy * stride : oy * stride + kh, ox * stride : ox * stride + kw]
                out[f, oy, ox] = np.sum(win * ws[f]) * alpha_real[f]
    return out


_MOD32_SHAPES = [
    (32, 1, 1),  # n = 32   (mod 0)
    (8, 2, 2),  # n = 32
    (16, 2, 2),  # n = 64
    (1, 1, 1),  # n = 1    (mod 1)
    (33, 1, 1),  # n = 33
    (13, 5, 1),  # n = 65
    (31, 1, 1),  # n = 31   (mod 31)
    (63, 1, 1),  # n = 63
    (19, 5, 1),  # n = 95
]


def test_binary_path_exactness():
    rng = np.random.default_rng(0xB17B17)
    started = time.monotonic()
    mods_seen = set()
    cases = 0
    for i in range(1000):
        if i % 2 == 0:
            c, kh, kw = _MOD32_SHAPES[(i // 2) % len(_MOD32_SHAPES)]
        else:
            c = int(rng.integers(1, 9))
            kh = int(rng.integers(1, 4))
            kw = int(rng.integers(1, 4))
        h = int(rng.integers(kh, kh + 4))
        w = int(rng.integers(kw, kw + 4))
        filters = int(rng.integers(1, 6))
        stride = int(rng.integers(1, 3))
        n_eff = c * kh * kw
        mods_seen.add(n_eff % 32)

        x_bits = rng.integers(0, 2, size=(c, h, w))
        w_bits = rng.integers(0, 2, size=(filters, c, kh, kw))
        alpha = rng.integers(-128, 128, size=filters)
        ase = int(rng.integers(-7, 1))
        x = pack_bits(x_bits, Shape(c, h, w), "activation")
        weights = pack_bits(w_bits.reshape(-1), Shape(filters * c, kh, kw), "weight")
        conv = BinConvParams(weights=weights, alpha=alpha, alpha_scale_exp=ase, stride=stride, n_effective=n_eff)

        got = binconv2d(x, conv)
        expected = _bipolar_loop_oracle(x_bits, w_bits, alpha.astype(np.float64) * 2.0**ase, stride)
        assert np.array_equal(got.data.astype(np.float64), expected), f"binconv2d mismatch at case {cases}"

        act = BinActParams(
            c_threshold=rng.integers(-128, 128, size=filters),
            c_scale_exp=int(rng.integers(-7, 3)),
            direction=rng.integers(0, 2, size=filters),
        )
        fused = binconv_thresholded(x, conv, act)
        two_step = binact(binconv2d(x, conv), act)
        assert np.array_equal(fused.words, two_step.words), f"threshold mismatch at case {cases}"
        assert fused.valid_bits == two_step.valid_bits
        cases += 1
    elapsed = time.monotonic() - started
    assert cases >= 1000
    assert {0, 1, 31} <= mods_seen
    assert elapsed < 30.0, f"binary sweep took {elapsed:.1f}s"
    _report("binary-path exactness", f"{cases} cases, n mod 32 classes {sorted(mods_seen)}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 3: fused batch-norm threshold vs unfused reference


def test_fusion_agrees_outside_quantization_band():
    rng = np.random.default_rng(0xF05E)
    channels, per_channel = 8, 10_000
    mu = rng.uniform(-2, 2, channels)
    sigma2 = rng.uniform(0.0, 4, channels)
    gamma = rng.uniform(0.1, 3, channels) * np.where(np.arange(channels) % 2 == 0, 1, -1)
    beta = rng.uniform(-2, 2, channels)
    eps = 1e-5
    params = fuse_batchnorm(mu, sigma2, gamma, beta, eps)
    c_exact = mu - beta / gamma * np.sqrt(sigma2 + eps)
    half_step = 2.0 ** (params.c_scale_exp - 1)

    xs = rng.uniform(-8, 8, size=(channels, 1, per_channel)).astype(np.float32)
    pre = FloatTensor(Shape(channels, 1, per_channel), xs)
    fused = unpack_bits(binact(pre, params)).reshape(channels, per_channel)
    reference = (batchnorm_ref(pre, mu, sigma2, gamma, beta, eps).data >= 0).astype(np.uint8)
    reference = reference.reshape(channels, per_channel)

    outside = np.abs(xs.reshape(channels, per_channel).astype(np.float64) - c_exact[:, None]) > half_step
    disagreements = int(np.sum(fused[outside] != reference[outside]))
    assert disagreements == 0
    assert outside.sum() >= 0.9 * channels * per_channel  # the band is narrow
    _report(
        "batch-norm fusion",
        f"{channels}x{per_channel} scalars, {int(outside.sum())} outside band, 0 disagreements",
    )


# ---------------------------------------------------------------------------
# criteria 4-5: cascade identities and latency model on a synthetic pair


def test_cascade_identities_and_latency_model():
    model = tiny_model(seed=0xCA5CADE)
    images, labels = tiny_dataset(n=1000, seed=0xDA7A)
    profile = synthetic_profile(model)
    l_bnn = arm_latency(model.bnn, profile)
    l_int8 = arm_latency(model.int8, profile)
    bs = len(images)

    # independent two-pass oracle: run both arms on every sample, apply the
    # confidence definition directly on sorted probabilities
    oracle_cs = np.empty(bs)
    oracle_bnn_top = np.empty(bs, dtype=np.int64)
    oracle_int8_top = np.empty(bs, dtype=np.int64)
    for i in range(bs):
        xq = quantize_input(images[i], model.input_shape)
        pb = run_arm(model.bnn, xq).probs.astype(np.float64)
        pi = run_arm(model.int8, xq).probs.astype(np.float64)
        s = np.sort(pb)
        oracle_cs[i] = s[-1] - s[-2]
        oracle_bnn_top[i] = int(np.argmax(pb))
        oracle_int8_top[i] = int(np.argmax(pi))

    cts = [round(0.1 * i, 1) for i in range(10)]
    mismatches = 0
    reports = {}
    for ct in cts:
        report = evaluate_batch(model, images, labels, CascadeConfig(ct), profile)
        reports[ct] = report
        for rec in report.samples:
            expected_source = "bnn" if oracle_cs[rec.index] >= ct else "int8"
            if rec.source != expected_source:
                mismatches += 1
    assert mismatches == 0

    # exact bnn-only accuracy at ct = 0
    bnn_only_accuracy = float(np.mean(oracle_bnn_top == labels.astype(np.int64)))
    assert reports[0.0].accuracy == bnn_only_accuracy
    assert reports[0.0].forwarded_count == 0

    # monotone escalation
    forwarded = [reports[ct].forwarded_count for ct in cts]
    assert forwarded == sorted(forwarded)

    _report(
        "cascade identities",
        f"{bs} samples, 10 thresholds, 0 routing mismatches, forwarded {forwarded[0]}..{forwarded[-1]}",
    )

    # latency model: batch cost is exactly the per-sample sum, row by row
    rows = sweep_ct(model, images, labels, cts, profile)
    for row in rows:
        routed = oracle_cs < row.ct
        expected = sum(coopnet_latency(bool(r), l_bnn, l_int8, profile.l_cs) for r in routed)
        assert row.modeled_latency == expected
        assert isinstance(row.modeled_latency, int)
        assert row.modeled_latency == reports[row.ct].modeled_latency
    assert rows[0].modeled_latency == bs * (l_bnn + profile.l_cs)
    _report("latency model", f"{len(rows)} sweep rows exact; ct=0 row = BS*(L_BNN+L_CS) = {rows[0].modeled_latency}us")


# ---------------------------------------------------------------------------
# criterion 6: memory model sanity


def test_memory_model_sanity():
    model = build_caffenet()
    for layer in model.bnn.layers:
        if layer.kind == "binconv_fused":
            conv = layer.params.conv
            int8_bytes_per_filter = conv.n_effective  # 1 byte per weight
            expected = conv.filters * ((int8_bytes_per_filter + 7) // 8) + 2 * conv.filters
            assert layer_weight_bytes(layer) == expected
            assert binconv_weight_bytes(conv.filters, conv.n_effective) == expected

    rep = memory_report(model)
    int8_kib = rep.int8.total_bytes / 1024
    bnn_kib = rep.bnn.total_bytes / 1024
    assert 0.7 * 120 <= int8_kib <= 1.3 * 120, f"int8 arm at {int8_kib:.1f} KiB"
    assert 0.7 * 94 <= bnn_kib <= 1.3 * 94, f"bnn arm at {bnn_kib:.1f} KiB"
    _report(
        "memory model sanity",
        f"binary weight bytes exact; caffenet int8 {int8_kib:.1f} KiB vs 120, bnn {bnn_kib:.1f} KiB vs 94",
    )


# ---------------------------------------------------------------------------
# criterion 7: format robustness


def test_format_robustness():
    model = tiny_model(seed=0xF00D)
    data = model_bytes(model)

    reloaded = load(data)
    assert model_bytes(reloaded) == data

    rng = np.random.default_rng(0xFA22)
    crashes = 0
    caught = 0
    for _ in range(10_000):
        pos = int(rng.integers(0, len(data)))
        old = data[pos]
        new = int(rng.integers(0, 256))
        if new == old:
            new = (old + 1) % 256
        mutated = bytearray(data)
        mutated[pos] = new
        try:
            load(bytes(mutated))
            raise AssertionError(f"mutation at byte {pos} went undetected")
        except ModelFormatError:
            caught += 1
        except Exception:
            crashes += 1
    assert crashes == 0
    assert caught == 10_000
    _report("format robustness", f"10000 mutations -> 10000 structured errors, 0 crashes; round-trip byte-identical")
