import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopnet.errors import NumericError, ShapeError
from coopnet.tensors import (
    BitTensor,
    FloatTensor,
    QuantTensor,
    Shape,
    dequantize,
    pack_bits,
    quantize,
    unpack_bits,
)


def test_shape_validation():
    s = Shape(3, 32, 32)
    assert s.count == 3072
    assert Shape(5).as_tuple() == (5, 1, 1)
    with pytest.raises(ShapeError):
        Shape(0, 1, 1)
    with pytest.raises(ShapeError):
        Shape(3, -2, 1)
    with pytest.raises(ShapeError):
        Shape(2**20, 2**20, 1)  # count overflows 32 bits


def test_pack_bits_examples():
    t = pack_bits([1, 1, 0, 1], Shape(1, 1, 4), "activation")
    assert list(t.words) == [0b1011]
    assert t.valid_bits == 4

    z = pack_bits([0] * 32, Shape(1, 1, 32), "activation")
    assert list(z.words) == [0x00000000]

    # 40 alternating bits, weight role: second word holds bits 32..39 = 10101010
    # pattern (LSB first -> 0x55) and pad bits 8..31 all set -> 0xFFFFFF55.
    t40 = pack_bits([1, 0] * 20, Shape(1, 1, 40), "weight")
    assert [hex(w) for w in t40.words] == ["0x55555555", "0xffffff55"]


def test_pack_bits_errors():
    with pytest.raises(ShapeError):
        pack_bits([1, 0], Shape(1, 1, 3), "activation")
    with pytest.raises(ShapeError):
        pack_bits([1, 2, 0], Shape(1, 1, 3), "activation")
    with pytest.raises(ShapeError):
        pack_bits([1, 0], Shape(1, 1, 2), "bogus-role")


def test_bittensor_rejects_degenerate_and_bad_pads():
    with pytest.raises(ShapeError):
        BitTensor(Shape(1, 1, 1), np.array([0], dtype=np.uint32), valid_bits=0, role="activation")
    # activation pads must be zero: word with a stray high bit is invalid
    with pytest.raises(ShapeError):
        BitTensor(Shape(1, 1, 4), np.array([0x8000000B], dtype=np.uint32), valid_bits=4, role="activation")
    # weight pads must be one
    with pytest.raises(ShapeError):
        BitTensor(Shape(1, 1, 4), np.array([0x0000000B], dtype=np.uint32), valid_bits=4, role="weight")


def test_unpack_roundtrip_examples():
    for bits, shape, role in [
        ([1, 1, 0, 1], Shape(1, 1, 4), "activation"),
        ([0] * 32, Shape(1, 1, 32), "activation"),
        ([1, 0] * 20, Shape(1, 1, 40), "weight"),
    ]:
        t = pack_bits(bits, shape, role)
        assert list(unpack_bits(t)) == bits
        t2 = pack_bits(unpack_bits(t), shape, role)
        assert np.array_equal(t2.words, t.words)


def test_roundtrip_random_1000_bits():
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, size=1000).astype(np.uint8)
    for role in ("activation", "weight"):
        t = pack_bits(bits, Shape(10, 10, 10), role)
        assert np.array_equal(unpack_bits(t), bits)


@settings(deadline=None, max_examples=80)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=200), st.booleans())
def test_roundtrip_property(bits, as_weight):
    role = "weight" if as_weight else "activation"
    t = pack_bits(bits, Shape(len(bits)), role)
    assert list(unpack_bits(t)) == bits
    again = pack_bits(unpack_bits(t), Shape(len(bits)), role)
    assert np.array_equal(again.words, t.words)
    assert again.valid_bits == t.valid_bits


def test_float_tensor_validation():
    with pytest.raises(ShapeError):
        FloatTensor(Shape(2), [1.0])
    with pytest.raises(NumericError):
        FloatTensor(Shape(2), [1.0, float("nan")])
    t = FloatTensor(Shape(2), [1.0, -2.5])
    with pytest.raises(ValueError):
        t.data[0] = 3.0  # immutable


def test_quant_tensor_validation():
    with pytest.raises(NumericError):
        QuantTensor(Shape(1), [1], scale_exp=1)
    with pytest.raises(NumericError):
        QuantTensor(Shape(1), [1], scale_exp=-32)
    q = QuantTensor(Shape(2), [-128, 127], scale_exp=-7)
    assert q.data.dtype == np.int8


def test_quantize_examples():
    assert quantize(FloatTensor(Shape(1), [0.5]), -7).data.ravel()[0] == 64
    assert quantize(FloatTensor(Shape(1), [1.0]), -7).data.ravel()[0] == 127  # saturates
    assert quantize(FloatTensor(Shape(1), [-1.0]), -7).data.ravel()[0] == -128
    with pytest.raises(NumericError):
        quantize(FloatTensor(Shape(1), [0.5]), 1)


def test_quantize_rounds_half_away_from_zero():
    q = quantize(FloatTensor(Shape(4), [0.5 / 128, -0.5 / 128, 1.5 / 128, -1.5 / 128]), -7)
    assert list(q.data.ravel()) == [1, -1, 2, -2]


def test_quantize_error_bound_random():
    # 100 uniform draws from [-1, 1); seed picked so no draw exceeds the
    # representable ceiling 127.5 * 2^-7, where the half-ULP bound holds.
    rng = np.random.default_rng(0)
    f = rng.uniform(-1.0, 1.0, size=100).astype(np.float32)
    assert np.all(f < 127.5 * 2.0**-7)
    q = quantize(FloatTensor(Shape(100), f), -7)
    err = np.abs(f.astype(np.float64) - q.flat().astype(np.float64) * 2.0**-7)
    assert err.max() <= 2.0**-8


@settings(deadline=None, max_examples=200)
@given(
    st.integers(-31, 0),
    st.floats(min_value=-128.0, max_value=127.5, exclude_max=True, allow_nan=False),
)
def test_quantize_dequantize_half_ulp(scale_exp, unit):
    f = np.float32(unit * 2.0**scale_exp)
    q = quantize(FloatTensor(Shape(1), [f]), scale_exp)
    back = dequantize(q).data.ravel()[0]
    assert abs(float(f) - float(back)) <= 2.0 ** (scale_exp - 1)


def test_layout_deterministic():
    rng = np.random.default_rng(3)
    vals = rng.integers(-128, 128, size=60).astype(np.int8)
    a = QuantTensor(Shape(3, 4, 5), vals, -5)
    b = QuantTensor(Shape(3, 4, 5), vals.copy(), -5)
    assert a.data.tobytes() == b.data.tobytes()
    bits = rng.integers(0, 2, size=60)
    ta = pack_bits(bits, Shape(3, 4, 5), "activation")
    tb = pack_bits(bits.copy(), Shape(3, 4, 5), "activation")
    assert ta.words.tobytes() == tb.words.tobytes()
