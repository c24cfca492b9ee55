"""AdamW with linear warmup then cosine decay.

Decoupled weight decay applies only to weight matrices (rank >= 2); biases,
layer-norm parameters, and mask tokens are excluded. Updates walk parameters
in their fixed creation order, so trajectories are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ModelParams


@dataclass
class AdamWState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def adamw_init(params: ModelParams) -> AdamWState:
    return AdamWState(
        m={k: np.zeros_like(v) for k, v in params.values.items()},
        v={k: np.zeros_like(v) for k, v in params.values.items()},
        step=0,
    )


def adamw_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamWState,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    weight_decay: float,
) -> None:
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, theta in params.values.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        if weight_decay and theta.ndim >= 2:
            update = update + weight_decay * theta
        theta -= lr * update


def lr_at(step: int, total_steps: int, warmup_steps: int, base_lr: float) -> float:
    """Learning rate for 1-indexed ``step``: linear warmup to ``base_lr`` over
    ``warmup_steps``, then cosine decay to zero at ``total_steps``."""
    if warmup_steps > 0 and step <= warmup_steps:
        return base_lr * step / warmup_steps
    span = max(total_steps - warmup_steps, 1)
    progress = (step - warmup_steps) / span
    return base_lr * 0.5 * (1.0 + float(np.cos(np.pi * progress)))
