import numpy as np
import pytest

from coopnet_exporter.cpnt import pack_words
from coopnet_exporter.data import synthetic_task, to_model_domain
from coopnet_exporter.export import ExportError, train_and_export
from coopnet_exporter.golden import GoldenRecord, bits_record, read_golden, write_golden

# cross-implementation check: the engine's packer must agree with ours
from coopnet.tensors import Shape, pack_bits


def test_pack_words_matches_engine_packing():
    rng = np.random.default_rng(3)
    for n in (1, 31, 32, 33, 64, 200, 1000):
        bits = rng.integers(0, 2, size=n).astype(np.uint8)
        ours_act = pack_words(bits, pad_value=0)
        ours_wt = pack_words(bits, pad_value=1)
        engine_act = pack_bits(bits, Shape(n), "activation").words
        engine_wt = pack_bits(bits, Shape(n), "weight").words
        assert np.array_equal(ours_act, engine_act), f"activation packing differs at n={n}"
        assert np.array_equal(ours_wt, engine_wt), f"weight packing differs at n={n}"


def test_golden_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    records = [
        GoldenRecord(0, "input", "input", "i8", (2, 3, 3), -7, rng.integers(-128, 128, 18).astype(np.int8)),
        GoldenRecord(0, "int8", "int8/conv1", "i8", (4, 2, 2), -6, rng.integers(-128, 128, 16).astype(np.int8)),
        GoldenRecord(0, "int8", "int8/fc", "i32", (5, 1, 1), -12, rng.integers(-(2**20), 2**20, 5).astype(np.int32)),
        GoldenRecord(0, "int8", "int8/softmax", "f32", (5, 1, 1), 0, rng.random(5).astype(np.float32)),
        bits_record(1, "bnn", "bnn/bridge", rng.integers(0, 2, size=(4, 3, 3)).astype(np.uint8)),
    ]
    path = tmp_path / "g.cpgv"
    write_golden(records, path)
    back = read_golden(path)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert (a.sample, a.arm, a.name, a.dtype, tuple(a.shape), a.scale_exp) == (
            b.sample,
            b.arm,
            b.name,
            b.dtype,
            tuple(b.shape),
            b.scale_exp,
        )
        assert np.array_equal(a.payload, b.payload)

    corrupted = bytearray(path.read_bytes())
    corrupted[20] ^= 0xFF
    bad = tmp_path / "bad.cpgv"
    bad.write_bytes(bytes(corrupted))
    with pytest.raises(ValueError):
        read_golden(bad)


def test_synthetic_task_shapes_and_determinism():
    (tx, ty), (ex, ey), n = synthetic_task(50, 20, seed=5)
    (tx2, ty2), _, _ = synthetic_task(50, 20, seed=5)
    assert tx.shape == (50, 3, 32, 32) and tx.dtype == np.uint8
    assert ex.shape == (20, 3, 32, 32) and ey.shape == (20,)
    assert n == 10
    assert np.array_equal(tx, tx2) and np.array_equal(ty, ty2)
    dom = to_model_domain(tx)
    assert dom.min() >= -1.0 and dom.max() < 1.0


def test_unknown_task_rejected(tmp_path):
    with pytest.raises(ExportError):
        train_and_export(task="mnist", out_dir=str(tmp_path))
