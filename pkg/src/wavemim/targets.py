"""Reconstruction-target assembly from a wavelet pyramid.

A :class:`LevelSelection` pairs an ascending subset of decomposition depths
with encoder tap layers and loss weights. Entry ``k`` (1-based, shallow to
deep) takes the three detail planes of the k-th selected level, so shallow
taps get the finest, highest-frequency coefficients and the deepest tap gets
the coarsest. The last entry additionally concatenates the approximation
plane after the detail channels, which is why the deepest selected level must
equal the pyramid depth.

Channel order inside an entry is fixed: H(ch 0..C-1), V(...), D(...), then
approximation channels on the last entry only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dwt import WaveletPyramid
from .errors import ConfigError


@dataclass(frozen=True)
class LevelSelection:
    """Selected decomposition levels with their tap layers and loss weights."""

    levels: tuple[int, ...]
    tap_layers: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        k = len(self.levels)
        if k < 1:
            raise ConfigError("selection must contain at least one level")
        if len(self.tap_layers) != k or len(self.weights) != k:
            raise ConfigError(
                f"selection lengths differ: {k} levels, {len(self.tap_layers)} "
                f"tap layers, {len(self.weights)} weights"
            )
        if any(l < 1 for l in self.levels) or any(
            a >= b for a, b in zip(self.levels, self.levels[1:])
        ):
            raise ConfigError(f"levels must be ascending and >= 1, got {self.levels}")
        if any(t < 1 for t in self.tap_layers) or any(
            a >= b for a, b in zip(self.tap_layers, self.tap_layers[1:])
        ):
            raise ConfigError(
                f"tap layers must be strictly increasing and >= 1, got {self.tap_layers}"
            )
        if any(w <= 0 for w in self.weights):
            raise ConfigError(f"weights must be positive, got {self.weights}")

    @property
    def count(self) -> int:
        return len(self.levels)


def layer_for_level(sel: LevelSelection, k: int) -> int:
    """Tap layer for the k-th (1-based) target entry."""
    if not 1 <= k <= sel.count:
        raise IndexError(f"entry index {k} out of range 1..{sel.count}")
    return sel.tap_layers[k - 1]


@dataclass
class TargetEntry:
    """One reconstruction target: coefficient planes plus tap metadata."""

    level: int
    layer: int
    weight: float
    values: np.ndarray  # (channels, side, side)
    mean: np.ndarray | None = None  # per-channel stats, set by normalization
    var: np.ndarray | None = None

    @property
    def side(self) -> int:
        return self.values.shape[-1]

    @property
    def channels(self) -> int:
        return self.values.shape[0]


@dataclass
class TargetSet:
    """Ordered multi-level targets, shallow (fine) to deep (coarse)."""

    entries: list[TargetEntry] = field(default_factory=list)
    source_channels: int = 0
    normalized: bool = False

    @property
    def count(self) -> int:
        return len(self.entries)

    def weights(self) -> tuple[float, ...]:
        return tuple(entry.weight for entry in self.entries)

    def sides(self) -> tuple[int, ...]:
        return tuple(entry.side for entry in self.entries)


def build_targets(pyramid: WaveletPyramid, sel: LevelSelection) -> TargetSet:
    """Assemble targets from the selected pyramid levels.

    The approximation plane is concatenated onto the deepest entry, so the
    deepest selected level must equal the pyramid depth.
    """
    if sel.levels[-1] > pyramid.depth:
        raise ConfigError(
            f"selected level {sel.levels[-1]} exceeds pyramid depth {pyramid.depth}"
        )
    if sel.levels[-1] != pyramid.depth:
        raise ConfigError(
            "the approximation plane attaches to the deepest entry: deepest "
            f"selected level {sel.levels[-1]} must equal pyramid depth {pyramid.depth}"
        )
    entries = []
    for k, level in enumerate(sel.levels, start=1):
        h, v, d = pyramid.details[level - 1]
        planes = [h, v, d]
        if k == sel.count:
            planes.append(pyramid.approx)
        values = np.concatenate(planes, axis=0)
        entries.append(
            TargetEntry(
                level=level,
                layer=sel.tap_layers[k - 1],
                weight=sel.weights[k - 1],
                values=values,
            )
        )
    return TargetSet(entries=entries, source_channels=pyramid.source_shape[0])


def normalize_targets(ts: TargetSet, epsilon: float = 1e-6) -> TargetSet:
    """Standardize each entry per channel over its spatial positions.

    ``y = (w - mean) / sqrt(var + epsilon)`` with population variance; the
    statistics are recorded on the returned entries so the mapping is
    invertible. Zero-variance channels map to all zeros thanks to the epsilon
    guard.
    """
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    entries = []
    for entry in ts.entries:
        mean = entry.values.mean(axis=(1, 2))
        var = entry.values.var(axis=(1, 2))
        scale = np.sqrt(var + epsilon)
        values = (entry.values - mean[:, None, None]) / scale[:, None, None]
        entries.append(replace(entry, values=values, mean=mean, var=var))
    return TargetSet(
        entries=entries, source_channels=ts.source_channels, normalized=True
    )
