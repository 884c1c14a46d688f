"""Change accounting, change maps and the integer export for rich-model steganalysis."""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .float_plane import MANTISSA_BITS, capacity, check_cover, plane_bit_index, raw_words

EXPORT_MAGIC = b"HSTGQ1\x00\x00"
EXPORT_CLAMP = 1e7


@dataclass
class EmbedReport:
    flips_per_plane: np.ndarray
    total_distortion: float
    change_rate: float
    change_map: np.ndarray  # True where any plane changed

    @property
    def total_flips(self) -> int:
        return int(self.flips_per_plane.sum())


def diff_report(cover, stego, costs, planes: int | None = None) -> EmbedReport:
    """Per-plane bit flips between cover and stego, and the additive distortion.

    ``costs`` is a CostMap or array; each flipped bit adds its pixel's cost.
    Planes default to the cover's n_x.  Differences outside those planes
    (sign, exponent, frozen or deeper mantissa bits) raise ValueError.
    """
    cover = check_cover(cover)
    stego = check_cover(stego)
    if cover.shape != stego.shape:
        raise ValueError(f"shape mismatch: {cover.shape} vs {stego.shape}")
    rho = np.asarray(getattr(costs, "rho", costs), dtype=np.float64)
    if rho.shape != cover.shape:
        raise ValueError("cost map shape differs from the images")
    n = capacity(cover).n.astype(np.int64)
    k_max = int(n.min()) if planes is None else planes
    if k_max > n.min():
        raise ValueError(f"{k_max} planes requested but the cover's n_x is {n.min()}")
    diff = raw_words(cover) ^ raw_words(stego)

    flips = np.zeros(k_max, dtype=np.int64)
    per_pixel = np.zeros(cover.shape, dtype=np.int64)
    seen = np.zeros_like(diff)
    for k in range(1, k_max + 1):
        shift = (MANTISSA_BITS - plane_bit_index(n, k)).astype(np.uint32)
        bit = (diff >> shift) & 1
        seen |= bit << shift
        flips[k - 1] = bit.sum()
        per_pixel += bit
    if (diff & ~seen).any():
        raise ValueError("stego differs from cover outside the embedding planes")

    changed = per_pixel > 0
    with np.errstate(invalid="ignore"):
        distortion = float(np.sum(rho[changed] * per_pixel[changed]))
    denom = cover.size * k_max
    return EmbedReport(
        flips_per_plane=flips,
        total_distortion=distortion,
        change_rate=float(flips.sum()) / denom if denom else 0.0,
        change_map=changed,
    )


def quantize_for_steganalysis(image) -> np.ndarray:
    """clamp to [0, 1e7], then round half away from zero."""
    x = np.clip(np.asarray(image, dtype=np.float64), 0.0, EXPORT_CLAMP)
    return np.floor(x + 0.5).astype(np.int32)


def steganalysis_export(image, path) -> None:
    img = check_cover(image)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(EXPORT_MAGIC + struct.pack("<II", w, h))
        f.write(quantize_for_steganalysis(img).astype("<i4").tobytes())


def load_steganalysis_export(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != EXPORT_MAGIC:
        raise ValueError(f"{path}: not a steganalysis export")
    w, h = struct.unpack("<II", raw[8:16])
    return np.frombuffer(raw, dtype="<i4", offset=16, count=w * h).reshape(h, w)


def change_map_image(report: EmbedReport, path) -> None:
    """Binary PGM (P5), changed pixels white."""
    h, w = report.change_map.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.where(report.change_map, 255, 0).astype(np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    head = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", raw)
    if head is None:
        raise ValueError(f"{path}: expected 8-bit binary PGM")
    w, h = int(head[1]), int(head[2])
    return np.frombuffer(raw, dtype=np.uint8, offset=head.end(), count=w * h).reshape(h, w)


def block_entropy(mask, block: int = 16) -> float:
    """Shannon entropy (bits) of how flips spread over block x block tiles.

    Uniform scattering gives log2(#tiles); concentrated flips give less.
    """
    mask = np.asarray(mask)
    if mask.ndim == 3:
        mask = mask.sum(axis=0)
    h, w = mask.shape
    hb, wb = h // block, w // block
    counts = mask[: hb * block, : wb * block].reshape(hb, block, wb, block).sum(axis=(1, 3)).ravel()
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())
