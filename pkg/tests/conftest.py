import numpy as np
import pytest

from coopnet.bnn import BinActParams, BinConvParams
from coopnet.int8 import Int8ConvParams, Int8FcParams
from coopnet.modelfile import (
    ARM_BNN,
    ARM_INT8,
    BinConvFusedParams,
    CoopModel,
    LayerSpec,
    ModelGraph,
    PoolParams,
)
from coopnet.tensors import QuantTensor, Shape, pack_bits


def tiny_model(seed: int = 424242) -> CoopModel:
    """Small two-arm model (2x8x8 input, 4 classes) with seeded random weights."""
    rng = np.random.default_rng(seed)

    def conv(name, filters, c, k, pad, shift=7):
        w = QuantTensor(Shape(filters * c, k, k), rng.integers(-8, 9, size=filters * c * k * k), -7)
        b = rng.integers(-(2**9), 2**9, size=filters).astype(np.int32)
        return LayerSpec("conv_int8", name, Int8ConvParams(weights=w, bias=b, pad=pad, out_scale_shift=shift))

    def fc(name, out_f, in_f):
        w = QuantTensor(Shape(out_f, in_f, 1), rng.integers(-8, 9, size=out_f * in_f), -7)
        b = rng.integers(-(2**9), 2**9, size=out_f).astype(np.int32)
        return LayerSpec("fc_int8", name, Int8FcParams(weights=w, bias=b, out_scale_shift=7))

    def binconv(name, filters, c, k):
        n_eff = c * k * k
        w = pack_bits(rng.integers(0, 2, size=filters * n_eff), Shape(filters * c, k, k), "weight")
        conv_p = BinConvParams(weights=w, alpha=rng.integers(1, 25, size=filters), alpha_scale_exp=-6, n_effective=n_eff)
        act_p = BinActParams(
            c_threshold=rng.integers(-10, 11, size=filters),
            c_scale_exp=-1,
            direction=rng.integers(0, 2, size=filters),
        )
        return LayerSpec("binconv_fused", name, BinConvFusedParams(conv=conv_p, act=act_p))

    int8_arm = ModelGraph(
        layers=(
            conv("int8/conv1", 8, 2, 3, pad=1),
            LayerSpec("relu", "int8/relu1"),
            LayerSpec("maxpool", "int8/pool1", PoolParams(2, 2)),
            fc("int8/fc", 4, 8 * 4 * 4),
            LayerSpec("softmax_head", "int8/softmax"),
        ),
        input_shape=Shape(2, 8, 8),
        num_classes=4,
        arm=ARM_INT8,
    )
    bnn_arm = ModelGraph(
        layers=(
            conv("bnn/conv1", 8, 2, 3, pad=1),
            LayerSpec("maxpool", "bnn/pool1", PoolParams(2, 2)),
            LayerSpec(
                "binact_bridge",
                "bnn/bridge",
                BinActParams(
                    c_threshold=rng.integers(-32, 33, size=8),
                    c_scale_exp=-9,
                    direction=np.zeros(8, np.uint8),
                ),
            ),
            binconv("bnn/binconv2", 8, 8, 3),
            fc("bnn/fc", 4, 8 * 2 * 2),
            LayerSpec("softmax_head", "bnn/softmax"),
        ),
        input_shape=Shape(2, 8, 8),
        num_classes=4,
        arm=ARM_BNN,
    )
    return CoopModel(bnn=bnn_arm, int8=int8_arm, class_labels=("a", "b", "c", "d"))


def tiny_dataset(n: int = 64, seed: int = 777):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, 2, 8, 8)).astype(np.uint8)
    labels = rng.integers(0, 4, size=n).astype(np.uint8)
    return images, labels


@pytest.fixture
def model():
    return tiny_model()


@pytest.fixture
def dataset():
    return tiny_dataset()
