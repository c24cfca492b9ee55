"""Grayscale rendering of wavelet planes.

Detail planes hold signed coefficients, so zero maps to mid-gray 128 with
symmetric scaling by the max absolute value (an all-zero plane renders flat
128). The approximation plane is plain min-max scaled to 0..255; a constant
plane renders 0.
"""

from __future__ import annotations

import numpy as np


def detail_to_u8(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    scale = float(np.max(np.abs(plane)))
    if scale == 0.0:
        return np.full(plane.shape, 128, dtype=np.uint8)
    return np.clip(np.rint(128.0 + 127.0 * plane / scale), 0, 255).astype(np.uint8)


def approx_to_u8(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    lo, hi = float(plane.min()), float(plane.max())
    if hi == lo:
        return np.zeros(plane.shape, dtype=np.uint8)
    return np.clip(np.rint(255.0 * (plane - lo) / (hi - lo)), 0, 255).astype(np.uint8)
