"""Two-arm CNN inference: a bit-packed binary network escalating to an int8
network when its confidence score falls below a runtime threshold, plus
analytical latency and RAM models for MCU-class deployment planning."""

from .errors import (
    ChecksumError,
    CoopNetError,
    DatasetError,
    DegenerateChannelError,
    MagicError,
    ModelFormatError,
    NumericError,
    ProfileError,
    ShapeChainError,
    ShapeError,
    VersionError,
)
from .tensors import (
    BIT_LAYOUT,
    ROLE_ACTIVATION,
    ROLE_WEIGHT,
    BitTensor,
    FloatTensor,
    QuantTensor,
    Shape,
    dequantize,
    pack_bits,
    quantize,
    unpack_bits,
)

__version__ = "0.1.0"
