"""Random block-wise patch masking and exact mask rescaling.

Mask generation is a pure function of ``(grid, ratio, block, seed)`` driven by
the xoshiro256** stream from :mod:`wavemim.rng`, so independent
implementations agree bit for bit. The algorithm:

1. ``count = floor(ratio * grid**2 + 0.5)`` patches must end up masked
   (exact-count masking keeps batch shapes static).
2. Repeat until ``count`` is reached: draw a block top-left corner
   ``(row, col)``, each coordinate uniform in ``[0, grid)`` via
   ``next_below``; walk the block's patches in row-major order, clipped at the
   grid edge, marking any not yet masked. The final block stops patch by
   patch the moment the count is hit.

Rescaling a ``grid x grid`` mask to side ``s``:

* ``s == grid``: identity.
* ``s > grid`` (``s`` a multiple): each flag replicates over its
  ``(s/grid) x (s/grid)`` cell.
* ``s < grid`` (divides ``grid``): a coarse cell is masked iff ALL covered
  patches are masked, so partially visible regions never contribute
  reconstruction loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateMaskError, DimensionError
from .rng import Xoshiro256StarStar


def exact_masked_count(ratio: float, grid: int) -> int:
    """Half-up rounding of ``ratio * grid**2``."""
    return int(np.floor(ratio * grid * grid + 0.5))


@dataclass(frozen=True)
class PatchMask:
    """Boolean patch-grid mask; True marks a masked patch."""

    grid: int
    ratio: float
    block: int
    seed: int
    flags: np.ndarray  # (grid, grid) bool

    @property
    def masked_count(self) -> int:
        return int(self.flags.sum())

    @property
    def visible_count(self) -> int:
        return self.grid * self.grid - self.masked_count


@dataclass(frozen=True)
class ScaleMask:
    """A patch mask carried to another grid side, with its provenance."""

    side: int
    flags: np.ndarray  # (side, side) bool
    source: PatchMask
    rule: str  # "identity" | "replicate" | "all"

    @property
    def masked_count(self) -> int:
        return int(self.flags.sum())


def gen_block_mask(grid: int, ratio: float, block: int, seed: int) -> PatchMask:
    """Sample a block-wise mask with exactly ``round(ratio * grid**2)`` masked
    patches. ``block = 1`` reduces to uniform per-patch masking."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"mask ratio must lie in (0, 1), got {ratio}")
    if block < 1 or block > grid:
        raise ConfigError(f"block side must satisfy 1 <= block <= grid, got {block}")
    count = exact_masked_count(ratio, grid)
    if count == 0 or count == grid * grid:
        raise DegenerateMaskError(
            f"ratio {ratio} on a {grid}x{grid} grid rounds to {count} masked patches"
        )
    rng = Xoshiro256StarStar(seed)
    flags = np.zeros((grid, grid), dtype=bool)
    marked = 0
    while marked < count:
        row = rng.next_below(grid)
        col = rng.next_below(grid)
        for i in range(row, min(row + block, grid)):
            for j in range(col, min(col + block, grid)):
                if not flags[i, j]:
                    flags[i, j] = True
                    marked += 1
                    if marked == count:
                        break
            if marked == count:
                break
    flags.setflags(write=False)
    return PatchMask(grid=grid, ratio=ratio, block=block, seed=seed, flags=flags)


def rescale_mask(pm: PatchMask, side: int) -> ScaleMask:
    """Carry a patch mask to ``side`` per the module rules."""
    grid = pm.grid
    if side < 1:
        raise DimensionError(f"target side must be >= 1, got {side}")
    if side == grid:
        flags = pm.flags.copy()
        rule = "identity"
    elif side > grid and side % grid == 0:
        factor = side // grid
        flags = np.repeat(np.repeat(pm.flags, factor, axis=0), factor, axis=1)
        rule = "replicate"
    elif side < grid and grid % side == 0:
        factor = grid // side
        flags = pm.flags.reshape(side, factor, side, factor).all(axis=(1, 3))
        rule = "all"
    else:
        raise DimensionError(
            f"side {side} and grid {grid} must divide one another"
        )
    flags.setflags(write=False)
    return ScaleMask(side=side, flags=flags, source=pm, rule=rule)


def visible_indices(pm: PatchMask) -> np.ndarray:
    """Row-major indices of unmasked patches, strictly increasing."""
    return np.flatnonzero(~pm.flags.ravel())
