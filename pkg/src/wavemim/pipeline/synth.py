"""Synthetic training corpus: affine gradients plus sinusoidal gratings.

Every image is a pure function of its seed. Draw order (one xoshiro256**
stream per image):

1. per channel: base level in [0.35, 0.65], then horizontal and vertical
   gradient slopes in [-0.2, 0.2] -- the affine component
   ``base + gx * X + gy * Y`` over unit coordinates;
2. for each of two gratings: frequency in [1.0, 2.5] cycles across the image,
   orientation drawn from {0, 45, 90, 135} degrees (``next_below(4)``), phase
   in [0, 2*pi), then one shared amplitude in [0.08, 0.16]; the grating
   ``amp * sin(2*pi*freq*(X*cos + Y*sin) + phase)`` adds to every channel.

The sum is clipped to [0, 1]. Gradients and low frequencies put energy in the
coarse bands while the gratings' 2-px-and-up oscillations feed the fine
bands, so every decomposition level sees signal; the four orientations line
up with the transform's H/V/D split, exciting each detail orientation
directly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..rng import Xoshiro256StarStar, derive_seed
from . import netpbm

GRATINGS = 2


def synth_image(side: int, seed: int, channels: int = 3) -> np.ndarray:
    rng = Xoshiro256StarStar(seed)
    coords = np.arange(side, dtype=np.float64) / max(side - 1, 1)
    x = coords[None, :]  # column coordinate
    y = coords[:, None]  # row coordinate
    img = np.zeros((channels, side, side))
    for c in range(channels):
        base = rng.uniform(0.35, 0.65)
        gx = rng.uniform(-0.2, 0.2)
        gy = rng.uniform(-0.2, 0.2)
        img[c] = base + gx * x + gy * y
    for _ in range(GRATINGS):
        freq = rng.uniform(1.0, 2.5)
        theta = rng.next_below(4) * np.pi / 4.0
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = rng.uniform(0.08, 0.16)
        wave = amp * np.sin(
            2.0 * np.pi * freq * (x * np.cos(theta) + y * np.sin(theta)) + phase
        )
        img += wave[None, :, :]
    return np.clip(img, 0.0, 1.0)


def synth_corpus(count: int, side: int, seed: int, channels: int = 3) -> np.ndarray:
    """(count, channels, side, side) corpus; image i uses derive_seed(seed, i)."""
    return np.stack(
        [synth_image(side, derive_seed(seed, i), channels) for i in range(count)]
    )


def write_corpus(out_dir, count: int, side: int, seed: int) -> list[Path]:
    """Write the corpus as 8-bit PPMs named ``img_0000.ppm`` onward."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        img = synth_image(side, derive_seed(seed, i))
        path = out / f"img_{i:04d}.ppm"
        netpbm.write_image(path, img)
        paths.append(path)
    return paths
