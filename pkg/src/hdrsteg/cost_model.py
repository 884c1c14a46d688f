"""Per-pixel flip costs and the exponent distortion-bias correction.

Costs are evaluated directly on the float luminance values.  Two adaptive
models follow the WOW and S-UNIWARD constructions; ``uniform`` is the
content-blind baseline.  ``correct`` divides every cost by 2**|E - 127| so
that pixels far from [1, 2) stop looking artificially smooth or busy.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pywt
from scipy import ndimage

from .errors import CostModelError
from .float_plane import EXPONENT_BIAS, check_cover, exponents

WOW_EPS = 1e-10
UNIWARD_SIGMA = 1.0

_HPF = np.array([-1.0, 2.0, -1.0])
DIRECTIONAL_FILTERS = (
    _HPF[None, :],  # horizontal
    _HPF[:, None],  # vertical
    np.diag(_HPF),  # diagonal
)


def _wavelet_filters(name="db8"):
    w = pywt.Wavelet(name)
    lo = np.asarray(w.dec_lo)[::-1]
    hi = np.asarray(w.dec_hi)[::-1]
    return (np.outer(lo, hi), np.outer(hi, lo), np.outer(hi, hi))


WAVELET_FILTERS = _wavelet_filters()


@dataclass(frozen=True)
class CostMap:
    rho: np.ndarray  # float64, inf marks wet pixels
    corrected: bool = False
    model: str = "uniform"

    def __post_init__(self):
        if np.isnan(self.rho).any() or (self.rho < 0).any():
            raise CostModelError("costs must be non-negative and free of NaN")

    @property
    def shape(self):
        return self.rho.shape


def _uniform(img):
    return np.ones(img.shape)


def _directional(img):
    x = img.astype(np.float64)
    rho = np.zeros_like(x)
    for k in DIRECTIONAL_FILTERS:
        resid = ndimage.correlate(x, k, mode="reflect")
        xi = ndimage.convolve(np.abs(resid), np.abs(k), mode="reflect")
        rho += 1.0 / (xi + WOW_EPS)
    return rho


def _wavelet(img):
    x = img.astype(np.float64)
    rho = np.zeros_like(x)
    for k in WAVELET_FILTERS:
        coef = ndimage.correlate(x, k, mode="reflect")
        # a unit change at p moves coefficient p - t + c by k[t]
        rho += ndimage.convolve(1.0 / (UNIWARD_SIGMA + np.abs(coef)), np.abs(k), mode="reflect")
    return rho


MODELS = {
    "uniform": _uniform,
    "directional": _directional,
    "wavelet": _wavelet,
}


def cost(image: np.ndarray, model: str = "directional") -> CostMap:
    try:
        fn = MODELS[model]
    except KeyError:
        raise CostModelError(f"unknown cost model {model!r}; choose from {sorted(MODELS)}") from None
    img = check_cover(image)
    return CostMap(fn(img), corrected=False, model=model)


def distortion_bias(image: np.ndarray) -> np.ndarray:
    """beta = 2**|E - 127| per pixel."""
    return np.exp2(np.abs(exponents(image) - EXPONENT_BIAS).astype(np.float64))


def correct(costs: CostMap, image: np.ndarray) -> CostMap:
    if costs.corrected:
        raise CostModelError("cost map is already corrected")
    if costs.shape != np.shape(image):
        raise CostModelError("cost map and image shapes differ")
    return replace(costs, rho=costs.rho / distortion_bias(image), corrected=True)


def export_costs(costs: CostMap, path) -> None:
    h, w = costs.shape
    header = f"hdrsteg-costmap v1 width={w} height={h} model={costs.model} corrected={int(costs.corrected)}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(costs.rho.astype("<f4").tobytes())


def load_costs(path) -> CostMap:
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    fields = head.decode("ascii").split()
    if fields[:2] != ["hdrsteg-costmap", "v1"]:
        raise CostModelError(f"{path}: not a cost map export")
    kv = dict(f.split("=", 1) for f in fields[2:])
    h, w = int(kv["height"]), int(kv["width"])
    rho = np.frombuffer(body, dtype="<f4", count=h * w).reshape(h, w).astype(np.float64)
    return CostMap(rho, corrected=kv["corrected"] == "1", model=kv["model"])
