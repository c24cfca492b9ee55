"""Columnar transformer autoencoder over visible tokens with per-level decoders.

Encoder: patchify, linear embed, add fixed 2D sinusoidal positional
embeddings at the original grid positions of the visible tokens, then a stack
of pre-norm transformer blocks (GELU MLP, expansion 4). The output of each
configured tap layer is recorded.

Decoder (one per tap, not shared): project the tap to the decoder width,
scatter visible tokens back to their grid positions with the level's learnable
mask token filling masked positions, add decoder positional embeddings, run
one transformer block over all tokens, then a size-adaptive linear head:

* target side > grid: each token emits its (side/grid)^2 sub-grid of values;
* target side = grid: one value vector per token;
* target side < grid: tokens merge space-to-depth in (grid/side)^2 groups
  before the head.

``forward_loss`` composes encoder, decoders, and the masked multi-level loss;
``grad`` returns exact reverse-mode derivatives for every parameter. Both are
pure functions of (params, inputs). Parameter init is Xavier-uniform from the
documented xoshiro stream, drawn in the fixed parameter order, so it is
bit-reproducible given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DimensionError, GradientError
from .loss import LossReport, METRICS
from .masking import PatchMask, rescale_mask, visible_indices
from .rng import Xoshiro256StarStar
from .targets import TargetSet

LN_EPS = 1e-6


@dataclass(frozen=True)
class ModelConfig:
    image_side: int
    channels: int
    patch_side: int
    depth: int
    width: int
    heads: int
    dec_width: int
    dec_heads: int
    tap_layers: tuple[int, ...]
    target_sides: tuple[int, ...]
    target_channels: tuple[int, ...]

    def __post_init__(self):
        if self.image_side % self.patch_side:
            raise ConfigError(
                f"image side {self.image_side} not divisible by patch side {self.patch_side}"
            )
        grid = self.image_side // self.patch_side
        if not self.tap_layers:
            raise ConfigError("at least one tap layer is required")
        if any(t < 1 or t > self.depth for t in self.tap_layers):
            raise ConfigError(
                f"tap layers {self.tap_layers} must lie in 1..{self.depth}"
            )
        if any(a >= b for a, b in zip(self.tap_layers, self.tap_layers[1:])):
            raise ConfigError(f"tap layers must be strictly increasing: {self.tap_layers}")
        if len(self.target_sides) != len(self.tap_layers) or len(
            self.target_channels
        ) != len(self.tap_layers):
            raise ConfigError("tap layers, target sides, and target channels must align")
        for side in self.target_sides:
            if side % grid and grid % side:
                raise ConfigError(
                    f"target side {side} and token grid {grid} must divide one another"
                )
        if self.width % self.heads or self.dec_width % self.dec_heads:
            raise ConfigError("width must be divisible by head count")
        if self.width % 4 or self.dec_width % 4:
            raise ConfigError("widths must be divisible by 4 for sinusoidal embeddings")

    @property
    def grid(self) -> int:
        return self.image_side // self.patch_side

    @property
    def tap_count(self) -> int:
        return len(self.tap_layers)


@dataclass
class ModelParams:
    """Named parameter arrays in their fixed creation order."""

    values: dict[str, np.ndarray]
    seed: int = 0

    def copy(self) -> "ModelParams":
        return ModelParams(
            values={k: v.copy() for k, v in self.values.items()}, seed=self.seed
        )


@dataclass
class EncoderTaps:
    """Recorded per-layer features for the visible tokens, shallow to deep."""

    layers: tuple[int, ...]
    features: list[np.ndarray] = field(default_factory=list)


def sincos_pos_embed(dim: int, grid: int) -> np.ndarray:
    """Fixed 2D sinusoidal embedding table, one row per grid position
    (row-major). Half the dim encodes the row coordinate, half the column."""
    if dim % 4:
        raise ConfigError(f"embedding dim must be divisible by 4, got {dim}")
    index = np.arange(grid * grid)
    rows = (index // grid).astype(np.float64)
    cols = (index % grid).astype(np.float64)
    return np.concatenate(
        [_sincos_1d(dim // 2, rows), _sincos_1d(dim // 2, cols)], axis=1
    )


def _sincos_1d(dim: int, pos: np.ndarray) -> np.ndarray:
    omega = 1.0 / (10000.0 ** (np.arange(dim // 2, dtype=np.float64) / (dim / 2)))
    args = np.outer(pos, omega)
    return np.concatenate([np.sin(args), np.cos(args)], axis=1)


def head_dims(cfg: ModelConfig, k: int) -> tuple[int, int]:
    """(input width, output width) of the level-k prediction head (0-based k)."""
    grid = cfg.grid
    side = cfg.target_sides[k]
    ch = cfg.target_channels[k]
    if side > grid:
        up = side // grid
        return cfg.dec_width, up * up * ch
    if side < grid:
        down = grid // side
        return down * down * cfg.dec_width, ch
    return cfg.dec_width, ch


def _param_specs(cfg: ModelConfig):
    """Yield (name, kind, shape) in the fixed creation/draw order.

    kind: "xavier" matrices consume rng draws; "zeros"/"ones" do not.
    """
    patch_dim = cfg.patch_side * cfg.patch_side * cfg.channels
    yield "patch_embed.w", "xavier", (patch_dim, cfg.width)
    yield "patch_embed.b", "zeros", (cfg.width,)
    for i in range(cfg.depth):
        for name, kind, shape in _block_specs(f"enc{i}", cfg.width):
            yield name, kind, shape
    for k in range(cfg.tap_count):
        prefix = f"dec{k}"
        yield f"{prefix}.proj.w", "xavier", (cfg.width, cfg.dec_width)
        yield f"{prefix}.proj.b", "zeros", (cfg.dec_width,)
        yield f"{prefix}.mask_token", "zeros", (cfg.dec_width,)
        for name, kind, shape in _block_specs(f"{prefix}.block", cfg.dec_width):
            yield name, kind, shape
        h_in, h_out = head_dims(cfg, k)
        yield f"{prefix}.head.w", "xavier", (h_in, h_out)
        yield f"{prefix}.head.b", "zeros", (h_out,)


def _block_specs(prefix: str, width: int):
    hidden = 4 * width
    yield f"{prefix}.ln1.g", "ones", (width,)
    yield f"{prefix}.ln1.b", "zeros", (width,)
    for proj in ("wq", "wk", "wv", "wo"):
        yield f"{prefix}.attn.{proj}", "xavier", (width, width)
        yield f"{prefix}.attn.{proj[1]}b", "zeros", (width,)
    yield f"{prefix}.ln2.g", "ones", (width,)
    yield f"{prefix}.ln2.b", "zeros", (width,)
    yield f"{prefix}.mlp.w1", "xavier", (width, hidden)
    yield f"{prefix}.mlp.b1", "zeros", (hidden,)
    yield f"{prefix}.mlp.w2", "xavier", (hidden, width)
    yield f"{prefix}.mlp.b2", "zeros", (width,)


def init_params(cfg: ModelConfig, seed: int) -> ModelParams:
    """Xavier-uniform weights, zero biases and mask tokens, unit LN gains.

    Matrices are drawn from one xoshiro256** stream in the spec order of
    ``_param_specs`` with row-major fill, so the result is bit-reproducible.
    """
    rng = Xoshiro256StarStar(seed)
    values: dict[str, np.ndarray] = {}
    for name, kind, shape in _param_specs(cfg):
        if kind == "xavier":
            fan_in, fan_out = shape
            bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
            values[name] = rng.uniform_array(shape, -bound, bound)
        elif kind == "ones":
            values[name] = np.ones(shape, dtype=np.float64)
        else:
            values[name] = np.zeros(shape, dtype=np.float64)
    return ModelParams(values=values, seed=seed)


# ---------------------------------------------------------------------------
# graph construction


def _wrap(params: ModelParams) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=True) for k, v in params.values.items()}


def _attention(pt, prefix: str, x: Tensor, heads: int) -> Tensor:
    batch, tokens, width = x.shape
    head_dim = width // heads
    q = ad.add(ad.matmul(x, pt[f"{prefix}.attn.wq"]), pt[f"{prefix}.attn.qb"])
    k = ad.add(ad.matmul(x, pt[f"{prefix}.attn.wk"]), pt[f"{prefix}.attn.kb"])
    v = ad.add(ad.matmul(x, pt[f"{prefix}.attn.wv"]), pt[f"{prefix}.attn.vb"])

    def split(t):
        t = ad.reshape(t, (batch, tokens, heads, head_dim))
        return ad.transpose(t, (0, 2, 1, 3))

    q, k, v = split(q), split(k), split(v)
    scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(head_dim))
    attn = ad.softmax(scores)
    out = ad.matmul(attn, v)
    out = ad.reshape(ad.transpose(out, (0, 2, 1, 3)), (batch, tokens, width))
    return ad.add(ad.matmul(out, pt[f"{prefix}.attn.wo"]), pt[f"{prefix}.attn.ob"])


def _block(pt, prefix: str, x: Tensor, heads: int) -> Tensor:
    normed = ad.layer_norm(x, pt[f"{prefix}.ln1.g"], pt[f"{prefix}.ln1.b"], LN_EPS)
    x = ad.add(x, _attention(pt, prefix, normed, heads))
    normed = ad.layer_norm(x, pt[f"{prefix}.ln2.g"], pt[f"{prefix}.ln2.b"], LN_EPS)
    hidden = ad.gelu(ad.add(ad.matmul(normed, pt[f"{prefix}.mlp.w1"]), pt[f"{prefix}.mlp.b1"]))
    return ad.add(x, ad.add(ad.matmul(hidden, pt[f"{prefix}.mlp.w2"]), pt[f"{prefix}.mlp.b2"]))


def patchify(image: np.ndarray, patch_side: int) -> np.ndarray:
    """(channels, H, W) -> (grid*grid, patch_side**2 * channels), row-major
    patches, each flattened channel-major."""
    channels, height, width = image.shape
    grid_r, grid_c = height // patch_side, width // patch_side
    blocks = image.reshape(channels, grid_r, patch_side, grid_c, patch_side)
    blocks = blocks.transpose(1, 3, 0, 2, 4)  # (gr, gc, C, p, p)
    return np.ascontiguousarray(blocks.reshape(grid_r * grid_c, -1))


def _check_image(cfg: ModelConfig, image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    want = (cfg.channels, cfg.image_side, cfg.image_side)
    if arr.shape != want:
        raise DimensionError(f"image shape {arr.shape} does not match config {want}")
    return arr


def _check_mask(cfg: ModelConfig, pm: PatchMask) -> None:
    if pm.grid != cfg.grid:
        raise DimensionError(
            f"mask grid {pm.grid} does not match token grid {cfg.grid}"
        )


def _encode_graph(
    pt,
    cfg: ModelConfig,
    images: np.ndarray,
    masks: list[PatchMask],
    orders: list[np.ndarray] | None = None,
) -> list[Tensor]:
    """Shared encoder graph; returns the tensor recorded at every tap layer.

    ``orders[b]`` optionally fixes the feed order of sample b's visible
    tokens (a permutation of its visible indices); positional embeddings
    travel with their tokens, so outputs permute identically.
    """
    batch = images.shape[0]
    if orders is None:
        orders = [visible_indices(masks[b]) for b in range(batch)]
    pos = sincos_pos_embed(cfg.width, cfg.grid)
    vis_patches = []
    vis_pos = []
    for b in range(batch):
        patches = patchify(images[b], cfg.patch_side)
        vis_patches.append(patches[orders[b]])
        vis_pos.append(pos[orders[b]])
    x = ad.add(
        ad.matmul(ad.constant(np.stack(vis_patches)), pt["patch_embed.w"]),
        pt["patch_embed.b"],
    )
    x = ad.add(x, ad.constant(np.stack(vis_pos)))
    taps = []
    layer_set = set(cfg.tap_layers)
    for i in range(cfg.depth):
        x = _block(pt, f"enc{i}", x, cfg.heads)
        if i + 1 in layer_set:
            taps.append(x)
    return taps


def _decode_graph(
    pt,
    cfg: ModelConfig,
    k: int,
    tap: Tensor,
    masks: list[PatchMask],
    orders: list[np.ndarray] | None = None,
) -> Tensor:
    """Level-k decoder graph; returns predictions (batch, ch_k, side, side)."""
    batch = tap.shape[0]
    grid = cfg.grid
    tokens = grid * grid
    if orders is None:
        orders = [visible_indices(masks[b]) for b in range(batch)]
    n_vis = orders[0].shape[0]

    proj = ad.add(ad.matmul(tap, pt[f"dec{k}.proj.w"]), pt[f"dec{k}.proj.b"])

    # constant scatter operator: position <- j-th fed token
    scatter = np.zeros((batch, tokens, n_vis))
    hole = np.ones((batch, tokens, 1))
    for b in range(batch):
        scatter[b, orders[b], np.arange(n_vis)] = 1.0
        hole[b, orders[b], 0] = 0.0
    full = ad.add(
        ad.matmul(ad.constant(scatter), proj),
        ad.mul(ad.constant(hole), pt[f"dec{k}.mask_token"]),
    )
    full = ad.add(full, ad.constant(sincos_pos_embed(cfg.dec_width, grid)))
    full = _block(pt, f"dec{k}.block", full, cfg.dec_heads)

    side = cfg.target_sides[k]
    ch = cfg.target_channels[k]
    if side < grid:
        down = grid // side
        merged = ad.reshape(full, (batch, side, down, side, down, cfg.dec_width))
        merged = ad.transpose(merged, (0, 1, 3, 2, 4, 5))
        full = ad.reshape(merged, (batch, side * side, down * down * cfg.dec_width))
    out = ad.add(ad.matmul(full, pt[f"dec{k}.head.w"]), pt[f"dec{k}.head.b"])
    if side > grid:
        up = side // grid
        out = ad.reshape(out, (batch, grid, grid, up, up, ch))
        out = ad.transpose(out, (0, 5, 1, 3, 2, 4))
        return ad.reshape(out, (batch, ch, side, side))
    out = ad.reshape(out, (batch, side, side, ch))
    return ad.transpose(out, (0, 3, 1, 2))


def _loss_graph(
    pt,
    cfg: ModelConfig,
    images: np.ndarray,
    masks: list[PatchMask],
    target_stacks: list[np.ndarray],
    metric: str,
    weights,
) -> tuple[Tensor, list[float], list[int]]:
    """Full forward graph. Per-level means pool masked cells across the batch
    (for batch size 1 this equals ``loss.masked_distance``); a level whose
    pooled masked count is zero contributes a zero mean."""
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    if len(weights) != cfg.tap_count:
        raise DimensionError(
            f"{len(weights)} weights for {cfg.tap_count} configured levels"
        )
    batch = images.shape[0]
    taps = _encode_graph(pt, cfg, images, masks)
    total = ad.constant(0.0)
    means: list[float] = []
    counts: list[int] = []
    for k in range(cfg.tap_count):
        side = cfg.target_sides[k]
        ch = cfg.target_channels[k]
        pred = _decode_graph(pt, cfg, k, taps[k], masks)
        cell = np.zeros((batch, 1, side, side))
        pooled = 0
        for b in range(batch):
            flags = rescale_mask(masks[b], side).flags
            cell[b, 0] = flags
            pooled += int(flags.sum())
        diff = ad.sub(pred, ad.constant(target_stacks[k]))
        vals = ad.square(diff) if metric == "l2" else ad.abs_(diff)
        masked_sum = ad.sum_all(ad.mul(vals, ad.constant(cell)))
        if pooled == 0:
            mean_k = ad.constant(0.0)
        else:
            mean_k = ad.scale(masked_sum, 1.0 / (ch * pooled))
        total = ad.add(total, ad.scale(mean_k, float(weights[k])))
        means.append(float(mean_k.data))
        counts.append(pooled)
    return total, means, counts


def _stack_targets(cfg: ModelConfig, target_sets: list[TargetSet]) -> list[np.ndarray]:
    stacks = []
    for k in range(cfg.tap_count):
        side = cfg.target_sides[k]
        ch = cfg.target_channels[k]
        arrs = []
        for ts in target_sets:
            values = ts.entries[k].values
            if values.shape != (ch, side, side):
                raise DimensionError(
                    f"target entry {k + 1} has shape {values.shape}, config wants {(ch, side, side)}"
                )
            arrs.append(values)
        stacks.append(np.stack(arrs))
    return stacks


# ---------------------------------------------------------------------------
# public operations (single image; trainer uses the batched internals)


def encode_taps(
    params: ModelParams,
    cfg: ModelConfig,
    image: np.ndarray,
    pm: PatchMask,
    order: np.ndarray | None = None,
) -> EncoderTaps:
    """Run the encoder over the visible tokens; returns each tap's features
    as ``(visible_count, width)`` arrays."""
    arr = _check_image(cfg, image)
    _check_mask(cfg, pm)
    pt = _wrap(params)
    orders = None if order is None else [np.asarray(order)]
    taps = _encode_graph(pt, cfg, arr[None], [pm], orders)
    return EncoderTaps(
        layers=cfg.tap_layers, features=[t.data[0].copy() for t in taps]
    )


def decode_level(
    params: ModelParams,
    cfg: ModelConfig,
    tap: np.ndarray,
    pm: PatchMask,
    k: int,
) -> np.ndarray:
    """Decode one tap (1-based level index k) to its prediction grid
    ``(channels_k, side_k, side_k)``."""
    if not 1 <= k <= cfg.tap_count:
        raise ConfigError(f"level index {k} out of range 1..{cfg.tap_count}")
    _check_mask(cfg, pm)
    pt = _wrap(params)
    tap_t = ad.constant(np.asarray(tap, dtype=np.float64)[None])
    out = _decode_graph(pt, cfg, k - 1, tap_t, [pm])
    return out.data[0].copy()


def forward_loss(
    params: ModelParams,
    cfg: ModelConfig,
    image: np.ndarray,
    pm: PatchMask,
    targets: TargetSet,
    metric: str = "l2",
    weights=None,
) -> LossReport:
    """Composed masked multi-level loss for one image."""
    arr = _check_image(cfg, image)
    _check_mask(cfg, pm)
    if weights is None:
        weights = targets.weights()
    stacks = _stack_targets(cfg, [targets])
    pt = _wrap(params)
    total, means, counts = _loss_graph(pt, cfg, arr[None], [pm], stacks, metric, weights)
    return LossReport(
        level_means=tuple(means),
        level_counts=tuple(counts),
        weights=tuple(float(w) for w in weights),
        total=float(total.data),
    )


def grad(
    params: ModelParams,
    cfg: ModelConfig,
    image: np.ndarray,
    pm: PatchMask,
    targets: TargetSet,
    metric: str = "l2",
    weights=None,
) -> dict[str, np.ndarray]:
    """Exact reverse-mode derivatives of the total loss for every parameter."""
    arr = _check_image(cfg, image)
    _check_mask(cfg, pm)
    if weights is None:
        weights = targets.weights()
    stacks = _stack_targets(cfg, [targets])
    pt = _wrap(params)
    total, _, _ = _loss_graph(pt, cfg, arr[None], [pm], stacks, metric, weights)
    if not np.isfinite(total.data):
        raise GradientError(f"loss is non-finite: {float(total.data)}")
    total.backward()
    return {
        name: (np.zeros_like(params.values[name]) if t.grad is None else t.grad)
        for name, t in pt.items()
    }
