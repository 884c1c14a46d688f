"""Sender and receiver procedures over the mantissa bit planes.

Embedding: capacity -> per-plane quota -> corrected costs -> keyed pixel
permutation and STC per plane (effective LSB first) -> writeback.  The
receiver recomputes the capacity map from the stego itself; flips never reach
the exponent, so it sees exactly the sender's plane layout.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cost_model, simulator, stc
from .errors import CapacityExceededError, KeyFormatError, NoCapacityError, PayloadError
from .float_plane import capacity, check_cover, extract_planes, write_planes

KEY_VERSION = 1
LENGTH_BITS = 32

# domain separators for everything derived from perm_seed
_PERM, _CODE, _PAD = 1, 2, 3

_KEY_FIELDS = ("key_version", "relative_payload", "planes", "cost_model", "stc_h", "perm_seed", "framing")


@dataclass(frozen=True)
class StegoKey:
    relative_payload: float
    planes: int
    perm_seed: int
    cost_model: str = "directional"
    stc_h: int = stc.DEFAULT_HEIGHT
    framing: bool = True

    def __post_init__(self):
        if not 0.0 < self.relative_payload < 1.0:
            raise KeyFormatError("relative_payload must lie in (0, 1)")
        if self.planes < 1:
            raise KeyFormatError("planes must be at least 1")
        if not 1 <= self.stc_h <= 16:
            raise KeyFormatError("stc_h must lie in 1..16")
        if self.perm_seed < 0:
            raise KeyFormatError("perm_seed must be non-negative")
        if self.cost_model not in cost_model.MODELS:
            raise KeyFormatError(f"unknown cost model {self.cost_model!r}")

    def dumps(self) -> str:
        return (
            f"key_version={KEY_VERSION}\n"
            f"relative_payload={self.relative_payload!r}\n"
            f"planes={self.planes}\n"
            f"cost_model={self.cost_model}\n"
            f"stc_h={self.stc_h}\n"
            f"perm_seed={self.perm_seed}\n"
            f"framing={int(self.framing)}\n"
        )

    @classmethod
    def loads(cls, text: str) -> StegoKey:
        fields = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            name, sep, value = line.partition("=")
            if not sep or name in fields:
                raise KeyFormatError(f"bad key line {line!r}")
            fields[name] = value
        if set(fields) != set(_KEY_FIELDS):
            raise KeyFormatError(f"key fields must be exactly {', '.join(_KEY_FIELDS)}")
        if fields["key_version"] != str(KEY_VERSION):
            raise KeyFormatError(f"unsupported key_version {fields['key_version']}")
        try:
            return cls(
                relative_payload=float(fields["relative_payload"]),
                planes=int(fields["planes"]),
                perm_seed=int(fields["perm_seed"]),
                cost_model=fields["cost_model"],
                stc_h=int(fields["stc_h"]),
                framing={"0": False, "1": True}[fields["framing"]],
            )
        except (ValueError, KeyError) as exc:
            raise KeyFormatError(f"malformed key value: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path) -> StegoKey:
        with open(path, encoding="ascii") as f:
            return cls.loads(f.read())

    def plane_quota(self, n_pixels: int) -> int:
        """Message bits per plane, m_bar = floor(relative_payload * n)."""
        return int(self.relative_payload * n_pixels)

    def total_bits(self, n_pixels: int) -> int:
        return self.planes * self.plane_quota(n_pixels)

    def message_capacity(self, n_pixels: int) -> int:
        return self.total_bits(n_pixels) - (LENGTH_BITS if self.framing else 0)


def split_quota(m: int, k: int) -> list[int]:
    """Spread m bits over k planes: ceil(m/k) for the first m mod k, floor after."""
    q, r = divmod(m, k)
    return [q + 1 if i < r else q for i in range(k)]


def _rng(key: StegoKey, domain: int, *extra):
    return np.random.default_rng([key.perm_seed, domain, *extra])


def _checked_capacity(image, key):
    cap = capacity(image)
    if cap.n_x == 0:
        raise NoCapacityError("cover has zero or sub-threshold pixels (n_x = 0)")
    if key.planes > cap.n_x:
        raise CapacityExceededError(f"key uses {key.planes} planes but n_x = {cap.n_x}")
    return cap


def corrected_costs(cover, key: StegoKey) -> cost_model.CostMap:
    return cost_model.correct(cost_model.cost(cover, key.cost_model), cover)


def frame_message(bits, key: StegoKey, n_pixels: int) -> np.ndarray:
    """Length prefix (if framing) + message + keyed padding, exactly total_bits long."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    limit = key.message_capacity(n_pixels)
    if bits.size > limit:
        raise PayloadError(f"message of {bits.size} bits exceeds capacity of {limit} bits")
    parts = []
    if key.framing:
        parts.append(int_to_bits(bits.size, LENGTH_BITS))
    parts.append(bits)
    used = sum(p.size for p in parts)
    parts.append(_rng(key, _PAD).integers(0, 2, key.total_bits(n_pixels) - used, dtype=np.uint8))
    return np.concatenate(parts)


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def _plane_codes(key: StegoKey, n: int, quotas):
    codes = {}
    for q in set(quotas):
        codes[q] = stc.code_for(n, q, key.stc_h, [key.perm_seed, _CODE, q])
    return codes


def embed(cover, message, key: StegoKey, threads: int | None = None) -> np.ndarray:
    cover = check_cover(cover)
    cap = _checked_capacity(cover, key)
    message = np.asarray(message, dtype=np.uint8).ravel()
    if message.size == 0:
        return cover.copy()
    n = cover.size
    stream = frame_message(message, key, n)
    quotas = split_quota(stream.size, key.planes)
    bounds = np.concatenate([[0], np.cumsum(quotas)])
    rho = corrected_costs(cover, key).rho.ravel()
    stack = extract_planes(cover, cap, key.planes)
    codes = _plane_codes(key, n, quotas)

    def run(k):
        perm = _rng(key, _PERM, k).permutation(n)
        plane = stack.planes[k].reshape(-1)
        chunk = stream[bounds[k]:bounds[k + 1]]
        plane[perm] = stc.stc_encode(plane[perm], rho[perm], chunk, codes[quotas[k]])

    _for_each_plane(run, key.planes, threads)
    return write_planes(cover, stack)


def extract(stego, key: StegoKey) -> np.ndarray:
    stego = check_cover(stego)
    cap = _checked_capacity(stego, key)
    n = stego.size
    stack = extract_planes(stego, cap, key.planes)
    quotas = split_quota(key.total_bits(n), key.planes)
    codes = _plane_codes(key, n, quotas)
    parts = []
    for k in range(key.planes):
        perm = _rng(key, _PERM, k).permutation(n)
        parts.append(stc.stc_decode(stack.planes[k].reshape(-1)[perm], codes[quotas[k]], quotas[k]))
    stream = np.concatenate(parts)
    if not key.framing:
        return stream
    # a wrong key yields a garbage length; clamp instead of failing
    length = min(bits_to_int(stream[:LENGTH_BITS]), key.message_capacity(n))
    return stream[LENGTH_BITS:LENGTH_BITS + length]


def plane_plans(cover, m: int, key: StegoKey) -> list[simulator.EmbeddingPlan]:
    """Optimal-embedding plan for every plane when m bits are spread over them."""
    cover = check_cover(cover)
    _checked_capacity(cover, key)
    if m > key.total_bits(cover.size):
        raise PayloadError(f"{m} bits exceed the key's {key.total_bits(cover.size)}-bit payload")
    rho = corrected_costs(cover, key)
    cache = {}
    plans = []
    for q in split_quota(m, key.planes):
        if q not in cache:
            cache[q] = simulator.solve_lambda(rho, q)
        plans.append(cache[q])
    return plans


def simulate_embed(cover, m: int, key: StegoKey, seed):
    """Embed m bits with the optimal-embedding simulator instead of STC.

    Returns the stego image and a (K, H, W) boolean flip mask.
    """
    cover = check_cover(cover)
    cap = _checked_capacity(cover, key)
    plans = plane_plans(cover, m, key)
    stack = extract_planes(cover, cap, key.planes)
    mask = np.zeros(stack.planes.shape, dtype=bool)
    for k, plan in enumerate(plans):
        if plan.m > 0:
            mask[k] = simulator.simulate(plan, [seed, k])
    stack.planes ^= mask.astype(np.uint8)
    return write_planes(cover, stack), mask


def _for_each_plane(fn, k, threads):
    if threads is None:
        threads = int(os.environ.get("HDRSTEG_THREADS", "1") or 1)
    if threads <= 1 or k == 1:
        for i in range(k):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=min(threads, k)) as pool:
        list(pool.map(fn, range(k)))
