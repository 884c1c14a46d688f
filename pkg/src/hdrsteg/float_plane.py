"""IEEE-754 single-precision fields and the mantissa bit planes used for embedding.

Mantissa bits are indexed b = 1 (most significant) .. 23 (least significant),
so bit b sits at integer position 23 - b of the raw 32-bit word.  The first
seven mantissa bits are never touched; a pixel with capacity N carries planes
k = 1..N at mantissa bits b = 8 + N - k, plane 1 being its effective LSB.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceededError, MalformedCoverError, UnsuitableCoverError

MANTISSA_BITS = 23
EXPONENT_BIAS = 127
FROZEN_BITS = 7
MAX_CAPACITY = MANTISSA_BITS - FROZEN_BITS  # 16
# E - 111 bits are significant below 1.0: the deepest usable bit b = E - 104
# still moves the value by 2**(E - 127 - b) = 2**-23 > 1e-7.
CAPACITY_OFFSET = EXPONENT_BIAS - MANTISSA_BITS + FROZEN_BITS  # 111


@dataclass(frozen=True)
class FloatFields:
    sign: int
    exponent: int
    mantissa: int  # raw 23-bit field

    @property
    def fraction(self) -> float:
        """Mantissa read as a fraction in [0, 1)."""
        return self.mantissa / (1 << MANTISSA_BITS)

    @property
    def word(self) -> int:
        return (self.sign << 31) | (self.exponent << MANTISSA_BITS) | self.mantissa

    @property
    def bits(self) -> str:
        return format(self.word, "032b")

    def mantissa_bit(self, b: int) -> int:
        if not 1 <= b <= MANTISSA_BITS:
            raise ValueError(f"mantissa bit index {b} outside 1..23")
        return (self.mantissa >> (MANTISSA_BITS - b)) & 1


def decompose(pixel) -> FloatFields:
    x = np.float32(pixel)
    if not np.isfinite(x):
        raise MalformedCoverError(f"non-finite pixel value {pixel!r}")
    w = int(np.array(x, dtype=np.float32).view(np.uint32))
    return FloatFields(w >> 31, (w >> MANTISSA_BITS) & 0xFF, w & ((1 << MANTISSA_BITS) - 1))


def recompose(fields: FloatFields) -> np.float32:
    return np.array(fields.word, dtype=np.uint32).view(np.float32)[()]


def split_fields(values: np.ndarray):
    """Vectorized decompose: (sign, exponent, mantissa) integer arrays."""
    w = raw_words(values)
    return w >> 31, (w >> MANTISSA_BITS) & 0xFF, w & ((1 << MANTISSA_BITS) - 1)


def join_fields(sign, exponent, mantissa) -> np.ndarray:
    w = (np.asarray(sign, np.uint32) << 31) | (np.asarray(exponent, np.uint32) << MANTISSA_BITS)
    return (w | np.asarray(mantissa, np.uint32)).view(np.float32)


def raw_words(image: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(image, dtype=np.float32).view(np.uint32)


def exponents(image: np.ndarray) -> np.ndarray:
    """Biased exponent field of every pixel (int32 grid)."""
    return ((raw_words(image) >> MANTISSA_BITS) & 0xFF).astype(np.int32)


def check_cover(image: np.ndarray) -> np.ndarray:
    """Return ``image`` as a contiguous float32 grid, or raise if it is no cover."""
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise MalformedCoverError(f"cover must be a non-empty 2-D grid, got shape {img.shape}")
    if img.dtype != np.float32:
        raise MalformedCoverError(f"cover must hold float32 samples, got {img.dtype}")
    if not np.isfinite(img).all():
        raise MalformedCoverError("cover contains NaN or infinite pixels")
    if (img < 0).any():
        raise UnsuitableCoverError("cover contains negative pixels")
    return np.ascontiguousarray(img)


def pixel_capacity(exponent):
    """N = min(16, max(0, E - 111)); works on scalars and arrays."""
    return np.clip(np.asarray(exponent) - CAPACITY_OFFSET, 0, MAX_CAPACITY)


@dataclass
class CapacityMap:
    n: np.ndarray  # uint8 grid of N_{i,j}

    @property
    def n_x(self) -> int:
        return int(self.n.min())

    def __eq__(self, other):
        return isinstance(other, CapacityMap) and np.array_equal(self.n, other.n)


def capacity(image: np.ndarray) -> CapacityMap:
    img = check_cover(image)
    return CapacityMap(pixel_capacity(exponents(img)).astype(np.uint8))


@dataclass
class PlaneStack:
    planes: np.ndarray  # (K, H, W) uint8 bits
    bitpos: np.ndarray  # (K, H, W) uint8 mantissa bit index b

    @property
    def k(self) -> int:
        return self.planes.shape[0]


def plane_bit_index(n, k):
    """Mantissa bit index carrying plane ``k`` of a pixel with capacity ``n``."""
    return FROZEN_BITS + 1 + np.asarray(n) - k


def extract_planes(image: np.ndarray, cap: CapacityMap, k_planes: int) -> PlaneStack:
    img = check_cover(image)
    if k_planes < 1:
        raise ValueError("k_planes must be at least 1")
    if k_planes > cap.n_x:
        raise CapacityExceededError(f"{k_planes} planes requested but n_x = {cap.n_x}")
    if cap.n.shape != img.shape:
        raise ValueError("capacity map shape does not match image")
    raw = raw_words(img)
    n = cap.n.astype(np.int32)
    planes = np.empty((k_planes,) + img.shape, dtype=np.uint8)
    bitpos = np.empty_like(planes)
    for k in range(1, k_planes + 1):
        b = plane_bit_index(n, k)
        bitpos[k - 1] = b
        planes[k - 1] = (raw >> (MANTISSA_BITS - b).astype(np.uint32)) & 1
    return PlaneStack(planes, bitpos)


def write_planes(image: np.ndarray, stack: PlaneStack) -> np.ndarray:
    img = check_cover(image)
    if stack.planes.shape[1:] != img.shape or stack.bitpos.shape != stack.planes.shape:
        raise ValueError("plane stack shape does not match image")
    b = stack.bitpos.astype(np.int64)
    if b.size and (b.min() < FROZEN_BITS + 1 or b.max() > MANTISSA_BITS):
        raise ValueError("plane bit positions must lie in mantissa bits 8..23")
    raw = raw_words(img).copy()
    for k in range(stack.k):
        shift = (MANTISSA_BITS - b[k]).astype(np.uint32)
        bit = np.left_shift(np.uint32(1), shift)
        raw = (raw & ~bit) | (stack.planes[k].astype(np.uint32) << shift)
    return raw.view(np.float32)
