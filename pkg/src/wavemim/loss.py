"""Masked per-level distances and the weighted multi-level total.

The per-level reduction is the MEAN over masked cells and channels (not the
sum), so levels with different grid sizes contribute comparably before
weighting. Visible cells never enter the computation: masked cells are
gathered by boolean indexing, which makes the result bit-identical under any
perturbation of visible positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateLossError, DimensionError
from .masking import ScaleMask

METRICS = ("l1", "l2")


def masked_distance(
    pred: np.ndarray,
    target: np.ndarray,
    sm: ScaleMask,
    metric: str = "l2",
) -> tuple[float, int]:
    """Mean distance over masked cells and channels.

    ``pred`` and ``target`` are ``(channels, side, side)``; returns
    ``(mean, masked_cell_count)``.
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(
            f"prediction shape {pred.shape} != target shape {target.shape}"
        )
    if pred.ndim != 3 or pred.shape[-2:] != (sm.side, sm.side):
        raise DimensionError(
            f"grids must be (channels, {sm.side}, {sm.side}), got {pred.shape}"
        )
    count = sm.masked_count
    if count == 0:
        raise DegenerateLossError("mask selects zero cells")
    diff = pred[:, sm.flags] - target[:, sm.flags]
    if metric == "l2":
        vals = diff * diff
    else:
        vals = np.abs(diff)
    return float(np.mean(vals)), count


def total_loss(per_level: Sequence[tuple[float, int]], weights: Sequence[float]) -> float:
    """Weighted sum of per-level means; counts are carried for reporting only."""
    if len(per_level) != len(weights):
        raise DimensionError(
            f"{len(per_level)} per-level terms vs {len(weights)} weights"
        )
    total = 0.0
    for (mean, _count), weight in zip(per_level, weights):
        total += weight * mean
    return total


@dataclass(frozen=True)
class LossReport:
    """Per-level masked means/counts, their weights, and the weighted total."""

    level_means: tuple[float, ...]
    level_counts: tuple[int, ...]
    weights: tuple[float, ...]
    total: float

    def recomputed_total(self) -> float:
        return total_loss(list(zip(self.level_means, self.level_counts)), self.weights)


def make_report(
    per_level: Sequence[tuple[float, int]], weights: Sequence[float]
) -> LossReport:
    return LossReport(
        level_means=tuple(mean for mean, _ in per_level),
        level_counts=tuple(count for _, count in per_level),
        weights=tuple(weights),
        total=total_loss(per_level, weights),
    )
