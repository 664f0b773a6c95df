"""Exception hierarchy shared across the codec."""


class NvcError(Exception):
    """Base class for all codec errors."""

    code = "nvc-error"


class BadMagicError(NvcError):
    """Stream does not start with the container magic."""

    code = "bad-magic"


class UnsupportedVersionError(NvcError):
    """Container version is newer than this decoder understands."""

    code = "unsupported-version"


class TruncatedStreamError(NvcError):
    """Stream ended before a declared field or payload was complete."""

    code = "truncated"


class HeaderCorruptError(NvcError):
    """Header checksum mismatch."""

    code = "header-corrupt"


class ChunkOrderError(NvcError):
    """Chunks of a frame record violate the canonical order."""

    code = "chunk-order"


class CorruptStreamError(NvcError):
    """Entropy-coded payload failed its integrity check."""

    code = "corrupt-payload"


class ShapeMismatchError(NvcError):
    """Tensor arguments disagree in shape."""

    code = "shape-mismatch"


class NonFiniteInputError(NvcError):
    """A tensor contains NaN or infinity where finite values are required."""

    code = "non-finite"


class ConfigError(NvcError):
    """Invalid or inconsistent configuration."""

    code = "config"
