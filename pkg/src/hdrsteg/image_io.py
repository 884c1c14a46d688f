"""Float32 grayscale TIFF I/O, luminance extraction and tiling of HDR sources."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import tifffile
from tifffile import COMPRESSION, PREDICTOR, SAMPLEFORMAT

from .errors import (
    ChannelCountError,
    CompressionError,
    MalformedCoverError,
    SampleFormatError,
    TiffFormatError,
)
from .float_plane import capacity, check_cover

# Rec. 709 luminance weights (R, G, B)
REC709 = np.array([0.2126, 0.7152, 0.0722])

LOSSLESS = {
    COMPRESSION.NONE,
    COMPRESSION.LZW,
    COMPRESSION.ADOBE_DEFLATE,
    COMPRESSION.DEFLATE,
    COMPRESSION.PACKBITS,
    COMPRESSION.LZMA,
    COMPRESSION.ZSTD,
}
LOSSLESS_PREDICTORS = {PREDICTOR.NONE, PREDICTOR.HORIZONTAL, PREDICTOR.FLOATINGPOINT}


def _open_float_page(path):
    try:
        tif = tifffile.TiffFile(path)
    except (tifffile.TiffFileError, ValueError) as exc:
        raise TiffFormatError(f"{path}: not a readable TIFF ({exc})") from exc
    with tif:
        page = tif.pages.first
        if page.compression not in LOSSLESS:
            raise CompressionError(f"{path}: compression {page.compression.name} is not lossless")
        if page.predictor not in LOSSLESS_PREDICTORS:
            raise CompressionError(f"{path}: unsupported predictor {page.predictor!r}")
        if page.sampleformat != SAMPLEFORMAT.IEEEFP or page.bitspersample != 32:
            raise SampleFormatError(
                f"{path}: expected 32-bit IEEE float samples, got "
                f"{SAMPLEFORMAT(page.sampleformat).name}/{page.bitspersample}"
            )
        try:
            data = page.asarray()
        except Exception as exc:  # missing codec, truncated strips
            raise TiffFormatError(f"{path}: cannot decode sample data ({exc})") from exc
        return page.samplesperpixel, np.ascontiguousarray(data, dtype=np.float32)


def read_float_tiff(path) -> np.ndarray:
    """Read any float32 TIFF: (H, W) grayscale or (H, W, C) multi-channel."""
    spp, data = _open_float_page(path)
    if spp > 1 and data.ndim == 3 and data.shape[0] == spp and data.shape[-1] != spp:
        data = np.moveaxis(data, 0, -1)  # planar configuration
    return np.ascontiguousarray(data)


def read_cover(path) -> np.ndarray:
    spp, data = _open_float_page(path)
    if spp != 1 or data.ndim != 2:
        raise ChannelCountError(f"{path}: expected one channel, found {spp}")
    return check_cover(data)


def write_cover(image: np.ndarray, path, byteorder: str = "<") -> None:
    img = check_cover(image)
    tifffile.imwrite(
        path,
        img,
        byteorder=byteorder,
        photometric="minisblack",
        compression=None,
        metadata=None,
    )


def write_float_tiff(data: np.ndarray, path) -> None:
    """Write an (H, W) or (H, W, 3) float32 array; used for HDR source fixtures."""
    data = np.ascontiguousarray(data, dtype=np.float32)
    photometric = "rgb" if data.ndim == 3 else "minisblack"
    tifffile.imwrite(path, data, photometric=photometric, compression=None, metadata=None)


def extract_luminance(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {rgb.shape}")
    if not np.isfinite(rgb).all():
        raise MalformedCoverError("source image contains NaN or infinite values")
    if (rgb < 0).any():
        raise ValueError("source image has negative channel values")
    lum = rgb.astype(np.float64) @ REC709
    return lum.astype(np.float32)


def tile(image: np.ndarray, size: int) -> list[np.ndarray]:
    """Non-overlapping size x size crops in raster order; ragged borders dropped."""
    if size <= 0:
        raise ValueError("tile size must be positive")
    h, w = image.shape[:2]
    if size > h or size > w:
        raise ValueError(f"tile size {size} exceeds image {h}x{w}")
    return [
        np.ascontiguousarray(image[r:r + size, c:c + size])
        for r in range(0, h - size + 1, size)
        for c in range(0, w - size + 1, size)
    ]


def dynamic_range(image: np.ndarray) -> float:
    """max / min over strictly positive pixels (0.0 when none are positive)."""
    pos = image[image > 0]
    if pos.size == 0:
        return 0.0
    return float(pos.max()) / float(pos.min())


def filter_by_capacity(images, threshold: int, min_dynamic_range: float | None = 2.0**8):
    """Keep covers with n_x >= threshold and, unless disabled, range > min_dynamic_range."""
    kept = []
    for img in images:
        if capacity(img).n_x < threshold:
            continue
        if min_dynamic_range is not None and not dynamic_range(img) > min_dynamic_range:
            continue
        kept.append(img)
    return kept


def read_manifest(path) -> list[Path]:
    base = Path(path).parent
    paths = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            p = Path(line)
            paths.append(p if p.is_absolute() else base / p)
    return paths


def write_manifest(paths, path) -> None:
    Path(path).write_text("".join(f"{os.fspath(p)}\n" for p in paths))
