"""Run configuration: plain-text ``key = value`` files with ``[section]``
grouping, full defaults, and total validation.

Defaults follow the reference ViT pre-training profile where one is stated
(input 224, patch 16, mask ratio 0.75, 5-level decomposition with levels 2-5,
taps {3, 6, 9, 12}, decoder 256 wide with 8 heads, loss weights
{0.8, 0.9, 1.1, 1.2}, AdamW betas 0.9/0.95 with weight decay 0.05 and cosine
decay after linear warmup, random-crop + horizontal-flip augmentation);
encoder dims complete that profile at the standard base scale (depth 12,
width 768, 12 heads). Desk-scale values fill the knobs a cluster run would
own (batch 8, base lr 1e-3, step counts); :func:`desk_config` returns the
small configuration the verification suites train in minutes on one CPU.

Every invalid configuration is rejected before any compute with a message
naming the offending field.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, fields, replace

from ..errors import ConfigError
from ..masking import exact_masked_count
from ..model import ModelConfig
from ..targets import LevelSelection


@dataclass(frozen=True)
class RunConfig:
    # [data]
    source: str = "synth"  # "synth" or a directory of PPM images
    image_side: int = 224
    channels: int = 3
    synth_count: int = 256
    # [dwt]
    levels: int = 5
    selected: tuple[int, ...] = (2, 3, 4, 5)
    # [mask]
    ratio: float = 0.75
    block: int = 2
    # [model]
    patch: int = 16
    depth: int = 12
    width: int = 768
    heads: int = 12
    dec_width: int = 256
    dec_heads: int = 8
    taps: tuple[int, ...] = (3, 6, 9, 12)
    # [loss]
    weights: tuple[float, ...] = (0.8, 0.9, 1.1, 1.2)
    metric: str = "l2"
    # [train]
    steps: int = 300
    batch: int = 8
    base_lr: float = 2e-4
    scale_lr: bool = True  # peak lr = base_lr * batch / 256 when on
    warmup_steps: int = 30
    weight_decay: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.95
    adam_eps: float = 1e-8
    checkpoint_every: int = 100
    hflip: bool = True
    crop_pad: int = 2
    # [run]
    seed: int = 42
    out: str = "out"

    @property
    def grid(self) -> int:
        return self.image_side // self.patch if self.patch else 0


_SECTIONS = {
    "data": ("source", "image_side", "channels", "synth_count"),
    "dwt": ("levels", "selected"),
    "mask": ("ratio", "block"),
    "model": ("patch", "depth", "width", "heads", "dec_width", "dec_heads", "taps"),
    "loss": ("weights", "metric"),
    "train": (
        "steps",
        "batch",
        "base_lr",
        "scale_lr",
        "warmup_steps",
        "weight_decay",
        "beta1",
        "beta2",
        "adam_eps",
        "checkpoint_every",
        "hflip",
        "crop_pad",
    ),
    "run": ("seed", "out"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(section: str, key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "tuple[int, ...]":
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
        if kind == "tuple[float, ...]":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        return raw
    except ValueError as err:
        raise ConfigError(f"[{section}] {key}: {err}") from err


def load_config(path) -> RunConfig:
    """Parse a config file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    updates = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            updates[key] = _parse_value(section, key, raw)
    cfg = replace(RunConfig(), **updates)
    validate(cfg)
    return cfg


def canonical_lines(cfg: RunConfig) -> list[str]:
    """Sorted ``section.key = value`` lines; run.out is excluded because the
    output location does not affect any computed artifact."""
    lines = []
    for section in sorted(_SECTIONS):
        for key in sorted(_SECTIONS[section]):
            if key == "out":
                continue
            value = getattr(cfg, key)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{section}.{key} = {value}")
    return lines


def config_hash(cfg: RunConfig) -> str:
    digest = hashlib.sha256("\n".join(canonical_lines(cfg)).encode("utf-8"))
    return digest.hexdigest()


def write_config(cfg: RunConfig, path) -> None:
    parser = configparser.ConfigParser()
    for section, keys in _SECTIONS.items():
        parser[section] = {}
        for key in keys:
            value = getattr(cfg, key)
            if isinstance(value, tuple):
                value = ", ".join(str(v) for v in value)
            parser[section][key] = str(value)
    buf = io.StringIO()
    parser.write(buf)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def validate(cfg: RunConfig) -> None:
    """Cross-module consistency; raises ConfigError naming the field."""

    def need(cond: bool, message: str) -> None:
        if not cond:
            raise ConfigError(message)

    need(cfg.channels >= 1, f"data.channels must be >= 1, got {cfg.channels}")
    need(cfg.image_side >= 1, f"data.image_side must be >= 1, got {cfg.image_side}")
    need(cfg.source == "synth" or bool(cfg.source), "data.source must be 'synth' or a directory")
    need(cfg.synth_count >= 1, f"data.synth_count must be >= 1, got {cfg.synth_count}")

    need(cfg.levels >= 1, f"dwt.levels must be >= 1, got {cfg.levels}")
    need(
        cfg.image_side % (1 << cfg.levels) == 0,
        f"data.image_side {cfg.image_side} must be divisible by 2**dwt.levels = {1 << cfg.levels}",
    )
    need(len(cfg.selected) >= 1, "dwt.selected must name at least one level")
    need(
        all(1 <= l <= cfg.levels for l in cfg.selected),
        f"dwt.selected {cfg.selected} must lie in 1..{cfg.levels}",
    )
    need(
        all(a < b for a, b in zip(cfg.selected, cfg.selected[1:])),
        f"dwt.selected must be strictly ascending, got {cfg.selected}",
    )
    need(
        cfg.selected[-1] == cfg.levels,
        f"dwt.selected must end at dwt.levels (the approximation attaches there), got {cfg.selected}",
    )

    need(cfg.patch >= 1, f"model.patch must be >= 1, got {cfg.patch}")
    need(
        cfg.image_side % cfg.patch == 0,
        f"data.image_side {cfg.image_side} must be divisible by model.patch {cfg.patch}",
    )
    grid = cfg.image_side // cfg.patch
    need(cfg.depth >= 1, f"model.depth must be >= 1, got {cfg.depth}")
    need(
        len(cfg.taps) == len(cfg.selected),
        f"model.taps has {len(cfg.taps)} entries but dwt.selected has {len(cfg.selected)}",
    )
    need(
        all(1 <= t <= cfg.depth for t in cfg.taps),
        f"model.taps {cfg.taps} must lie in 1..model.depth = {cfg.depth}",
    )
    need(
        all(a < b for a, b in zip(cfg.taps, cfg.taps[1:])),
        f"model.taps must be strictly increasing, got {cfg.taps}",
    )
    need(
        cfg.width % cfg.heads == 0,
        f"model.width {cfg.width} must be divisible by model.heads {cfg.heads}",
    )
    need(
        cfg.dec_width % cfg.dec_heads == 0,
        f"model.dec_width {cfg.dec_width} must be divisible by model.dec_heads {cfg.dec_heads}",
    )
    need(cfg.width % 4 == 0, f"model.width {cfg.width} must be divisible by 4")
    need(cfg.dec_width % 4 == 0, f"model.dec_width {cfg.dec_width} must be divisible by 4")
    for level in cfg.selected:
        side = cfg.image_side >> level
        need(
            side % grid == 0 or grid % side == 0,
            f"target side {side} (level {level}) and token grid {grid} must divide one another",
        )

    need(
        len(cfg.weights) == len(cfg.selected),
        f"loss.weights has {len(cfg.weights)} entries but dwt.selected has {len(cfg.selected)}",
    )
    need(all(w > 0 for w in cfg.weights), f"loss.weights must be positive, got {cfg.weights}")
    need(cfg.metric in ("l1", "l2"), f"loss.metric must be l1 or l2, got {cfg.metric!r}")

    need(0.0 < cfg.ratio < 1.0, f"mask.ratio must lie in (0, 1), got {cfg.ratio}")
    need(1 <= cfg.block <= grid, f"mask.block must lie in 1..{grid}, got {cfg.block}")
    count = exact_masked_count(cfg.ratio, grid)
    need(
        0 < count < grid * grid,
        f"mask.ratio {cfg.ratio} rounds to a degenerate masked count {count} on grid {grid}",
    )

    need(cfg.steps >= 0, f"train.steps must be >= 0, got {cfg.steps}")
    need(cfg.batch >= 1, f"train.batch must be >= 1, got {cfg.batch}")
    need(cfg.base_lr > 0, f"train.base_lr must be > 0, got {cfg.base_lr}")
    need(
        0 <= cfg.warmup_steps <= max(cfg.steps, 1),
        f"train.warmup_steps must lie in 0..train.steps, got {cfg.warmup_steps}",
    )
    need(cfg.weight_decay >= 0, f"train.weight_decay must be >= 0, got {cfg.weight_decay}")
    need(0 <= cfg.beta1 < 1, f"train.beta1 must lie in [0, 1), got {cfg.beta1}")
    need(0 <= cfg.beta2 < 1, f"train.beta2 must lie in [0, 1), got {cfg.beta2}")
    need(cfg.adam_eps > 0, f"train.adam_eps must be > 0, got {cfg.adam_eps}")
    need(
        cfg.checkpoint_every >= 1,
        f"train.checkpoint_every must be >= 1, got {cfg.checkpoint_every}",
    )
    need(cfg.crop_pad >= 0, f"train.crop_pad must be >= 0, got {cfg.crop_pad}")
    need(cfg.seed >= 0, f"run.seed must be a non-negative 64-bit value, got {cfg.seed}")


def peak_lr(cfg: RunConfig) -> float:
    """Peak learning rate: the linear batch-scaling rule when enabled
    (``base_lr * batch / 256``), else ``base_lr`` directly."""
    if cfg.scale_lr:
        return cfg.base_lr * cfg.batch / 256.0
    return cfg.base_lr


def level_selection(cfg: RunConfig) -> LevelSelection:
    return LevelSelection(
        levels=tuple(cfg.selected), tap_layers=tuple(cfg.taps), weights=tuple(cfg.weights)
    )


def model_config(cfg: RunConfig) -> ModelConfig:
    sides = tuple(cfg.image_side >> level for level in cfg.selected)
    chans = tuple(
        4 * cfg.channels if i == len(cfg.selected) - 1 else 3 * cfg.channels
        for i in range(len(cfg.selected))
    )
    return ModelConfig(
        image_side=cfg.image_side,
        channels=cfg.channels,
        patch_side=cfg.patch,
        depth=cfg.depth,
        width=cfg.width,
        heads=cfg.heads,
        dec_width=cfg.dec_width,
        dec_heads=cfg.dec_heads,
        tap_layers=tuple(cfg.taps),
        target_sides=sides,
        target_channels=chans,
    )


def desk_config() -> RunConfig:
    """Reference desk-scale configuration: 32x32x3 input, 4-level pyramid,
    every scale-adaptation regime exercised, minutes-scale CPU training.

    Warmup spans the first quarter of the run: batch 8 makes early gradients
    noisy, so the schedule holds the learning rate down until the optimizer
    moments settle.
    """
    cfg = RunConfig(
        source="synth",
        image_side=32,
        channels=3,
        synth_count=256,
        levels=4,
        selected=(1, 2, 3, 4),
        ratio=0.75,
        block=2,
        patch=4,
        depth=8,
        width=64,
        heads=4,
        dec_width=32,
        dec_heads=2,
        taps=(2, 4, 6, 8),
        weights=(0.8, 0.9, 1.1, 1.2),
        metric="l2",
        steps=300,
        batch=8,
        base_lr=1e-3,
        scale_lr=False,
        warmup_steps=75,
        weight_decay=0.05,
        beta1=0.9,
        beta2=0.95,
        adam_eps=1e-8,
        checkpoint_every=150,
        hflip=True,
        crop_pad=2,
        seed=42,
        out="out",
    )
    validate(cfg)
    return cfg
