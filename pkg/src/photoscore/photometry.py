"""Global photometric features: brightness, Michelson contrast, dynamic
range, and resolution, all on the 0.3R + 0.6G + 0.1B luminance plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Image

LUMA_WEIGHTS = np.array([0.3, 0.6, 0.1])


@dataclass(frozen=True)
class GlobalFeatures:
    brightness: float
    contrast: float
    dynamic_range: float
    width: int
    height: int
    resolution: float  # megapixels


def to_grayscale(img: Image) -> np.ndarray:
    """Per-pixel luminance L = 0.3R + 0.6G + 0.1B, shape (h, w)."""
    return img.pixels @ LUMA_WEIGHTS


def michelson_contrast(luminance) -> float:
    """(Lmax - Lmin) / (Lmax + Lmin); 0 when the denominator is 0."""
    lum = np.asarray(luminance, dtype=np.float64)
    if lum.size == 0:
        return 0.0
    lo, hi = float(lum.min()), float(lum.max())
    if hi + lo == 0.0:
        return 0.0
    return (hi - lo) / (hi + lo)


def global_features(img: Image) -> GlobalFeatures:
    lum = to_grayscale(img)
    lo, hi = float(lum.min()), float(lum.max())
    return GlobalFeatures(
        brightness=float(lum.mean()),
        contrast=michelson_contrast(lum),
        dynamic_range=hi - lo,
        width=img.width,
        height=img.height,
        resolution=img.width * img.height / 1e6,
    )
