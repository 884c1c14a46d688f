"""Exception hierarchy shared by every hdrsteg module."""


class HdrStegError(Exception):
    """Base class for all errors raised by hdrsteg."""


class CoverError(HdrStegError):
    """The image cannot serve as a cover."""


class MalformedCoverError(CoverError):
    """NaN or infinite pixel values."""


class UnsuitableCoverError(CoverError):
    """Negative pixels, or no embeddable capacity at all (n_x == 0)."""


class NoCapacityError(UnsuitableCoverError):
    """Some pixel is zero, denormal or too small to carry a plane (n_x == 0)."""


class TiffFormatError(HdrStegError):
    """The TIFF file is not a lossless single-channel float32 image."""


class SampleFormatError(TiffFormatError):
    pass


class ChannelCountError(TiffFormatError):
    pass


class CompressionError(TiffFormatError):
    """Lossy or otherwise unsupported compression scheme."""


class CapacityExceededError(HdrStegError):
    """More planes requested than the cover's n_x allows."""


class PayloadError(HdrStegError):
    """Message does not fit, or payload outside the entropy range of the costs."""


class SaturationError(HdrStegError):
    """No trellis path satisfies the syndrome (wet bits block every route)."""


class KeyFormatError(HdrStegError):
    pass


class CostModelError(HdrStegError):
    pass
