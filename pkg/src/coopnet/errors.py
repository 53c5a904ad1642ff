"""Exception hierarchy. Every failure surfaced by the library is a CoopNetError."""


class CoopNetError(Exception):
    """Base class for all library errors."""


class ShapeError(CoopNetError):
    """Tensor shapes or dimensions are incompatible with the operation."""


class NumericError(CoopNetError):
    """Non-finite input, out-of-range scale, or other numeric contract violation."""


class DegenerateChannelError(CoopNetError):
    """Batch-norm fusion hit a channel whose scale factor is zero."""


class ProfileError(CoopNetError):
    """A latency profile is missing an entry or malformed."""


class DatasetError(CoopNetError):
    """IDX dataset file is malformed or inconsistent with its labels."""


class ModelFormatError(CoopNetError):
    """Base class for model-file load/save failures."""


class MagicError(ModelFormatError):
    """File does not start with the expected magic bytes."""


class VersionError(ModelFormatError):
    """File format version is not supported."""


class ChecksumError(ModelFormatError):
    """Trailing CRC32 does not match the file contents (includes truncation)."""


class ShapeChainError(ModelFormatError):
    """Layer output shape does not match the next layer's expected input."""
