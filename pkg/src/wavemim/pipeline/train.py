"""Pre-training loop: data ingestion, augmentation, target generation,
batched forward/backward, AdamW updates, checkpointing, and the step log.

Every random draw is derived statelessly from the run seed:

* batch composition for step ``s``: a fresh xoshiro stream seeded with
  ``derive_seed(derive_seed(seed, STREAM_BATCH), s)``, sampling image indices
  with replacement;
* the mask for the ``j``-th sample of step ``s`` uses seed
  ``derive_seed(derive_seed(seed, STREAM_MASK), (s - 1) * batch + j)``;
* augmentation draws likewise under ``STREAM_AUG``.

Because nothing carries generator state across steps, resuming from a
checkpoint reproduces the uninterrupted trajectory bit for bit.

Log format: one tab-separated line per step -- step, lr, one mean per level,
total -- with floats rendered by ``repr`` (no timestamps), so logs are
byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import model as model_mod
from ..dwt import dwt2_multi
from ..errors import ConfigError, GradientError, StructureError
from ..masking import PatchMask, gen_block_mask
from ..model import ModelParams
from ..rng import Xoshiro256StarStar, derive_seed
from ..targets import build_targets, normalize_targets
from . import container, netpbm, synth
from .config import RunConfig, config_hash, level_selection, model_config
from .optim import AdamWState, adamw_init, adamw_step, lr_at

STREAM_BATCH = 1
STREAM_MASK = 2
STREAM_AUG = 3


@dataclass
class TrainResult:
    final_checkpoint: Path
    log_path: Path
    steps_run: int


def load_dataset(cfg: RunConfig) -> np.ndarray:
    """(count, channels, side, side) float64 images in [0, 1]."""
    if cfg.source == "synth":
        return synth.synth_corpus(cfg.synth_count, cfg.image_side, cfg.seed, cfg.channels)
    src = Path(cfg.source)
    if not src.is_dir():
        raise ConfigError(f"data.source directory does not exist: {src}")
    paths = sorted(p for p in src.iterdir() if p.suffix in (".ppm", ".pgm"))
    if not paths:
        raise ConfigError(f"no .ppm/.pgm images under data.source {src}")
    images = []
    for path in paths:
        img = netpbm.read_image(path)
        if img.shape != (cfg.channels, cfg.image_side, cfg.image_side):
            raise ConfigError(
                f"{path.name}: shape {img.shape} does not match configured "
                f"({cfg.channels}, {cfg.image_side}, {cfg.image_side})"
            )
        images.append(img)
    return np.stack(images)


def augment(image: np.ndarray, rng: Xoshiro256StarStar, hflip: bool, crop_pad: int) -> np.ndarray:
    """Horizontal flip (p = 1/2) and a random shift crop via reflect padding.

    Draw order: flip bit first (if enabled), then row and column offsets in
    [0, 2 * crop_pad] (if crop_pad > 0). Output dims equal input dims.
    """
    out = image
    if hflip:
        if rng.next_below(2) == 1:
            out = out[:, :, ::-1]
    if crop_pad > 0:
        dy = rng.next_below(2 * crop_pad + 1)
        dx = rng.next_below(2 * crop_pad + 1)
        side = out.shape[-1]
        padded = np.pad(out, ((0, 0), (crop_pad, crop_pad), (crop_pad, crop_pad)), mode="reflect")
        out = padded[:, dy : dy + side, dx : dx + side]
    return np.ascontiguousarray(out)


def sample_mask(cfg: RunConfig, global_index: int) -> PatchMask:
    seed = derive_seed(derive_seed(cfg.seed, STREAM_MASK), global_index)
    return gen_block_mask(cfg.grid, cfg.ratio, cfg.block, seed)


def save_checkpoint(
    path: Path, params: ModelParams, state: AdamWState, step: int, cfg: RunConfig
) -> None:
    records = [(f"param/{k}", v) for k, v in params.values.items()]
    records += [(f"adam_m/{k}", v) for k, v in state.m.items()]
    records += [(f"adam_v/{k}", v) for k, v in state.v.items()]
    container.write_records(path, records)
    manifest = {
        "step": step,
        "seed": cfg.seed,
        "config_sha256": config_hash(cfg),
        "params": [
            {"name": k, "shape": list(v.shape)} for k, v in params.values.items()
        ],
    }
    path.with_suffix(".json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def load_checkpoint(path: Path, cfg: RunConfig) -> tuple[ModelParams, AdamWState, int]:
    manifest_path = Path(path).with_suffix(".json")
    if not manifest_path.exists():
        raise StructureError(f"checkpoint manifest missing: {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("config_sha256") != config_hash(cfg):
        raise ConfigError(
            "checkpoint was written under a different configuration "
            f"(hash {manifest.get('config_sha256')!r})"
        )
    records = container.read_record_dict(path)
    values: dict[str, np.ndarray] = {}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    for entry in manifest["params"]:
        name = entry["name"]
        for prefix, dest in (("param/", values), ("adam_m/", m), ("adam_v/", v)):
            key = prefix + name
            if key not in records:
                raise StructureError(f"checkpoint record missing: {key}")
            dest[name] = records[key].copy()
    step = int(manifest["step"])
    return (
        ModelParams(values=values, seed=int(manifest["seed"])),
        AdamWState(m=m, v=v, step=step),
        step,
    )


def build_sample(
    cfg: RunConfig, images: np.ndarray, index: int, global_index: int
):
    """Augmented image, its mask, and its normalized target arrays."""
    aug_rng = Xoshiro256StarStar(
        derive_seed(derive_seed(cfg.seed, STREAM_AUG), global_index)
    )
    img = augment(images[index], aug_rng, cfg.hflip, cfg.crop_pad)
    pyramid = dwt2_multi(img, cfg.levels)
    targets = normalize_targets(build_targets(pyramid, level_selection(cfg)))
    mask = sample_mask(cfg, global_index)
    return img, mask, targets


def pretrain(cfg: RunConfig, out_dir, resume: Path | None = None) -> TrainResult:
    """Run the optimization loop; returns paths to the final checkpoint and log."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mcfg = model_config(cfg)
    images = load_dataset(cfg)

    if resume is not None:
        params, state, start_step = load_checkpoint(Path(resume), cfg)
    else:
        params = model_mod.init_params(mcfg, cfg.seed)
        state = adamw_init(params)
        start_step = 0

    log_path = out / "log.tsv"
    batch_stream_seed = derive_seed(cfg.seed, STREAM_BATCH)
    n_images = images.shape[0]
    final_path = out / f"ckpt_{cfg.steps:06d}.wtns"

    if cfg.steps == 0:
        save_checkpoint(final_path, params, state, 0, cfg)
        log_path.write_text("", encoding="utf-8")
        return TrainResult(final_checkpoint=final_path, log_path=log_path, steps_run=0)

    mode = "a" if resume is not None else "w"
    with open(log_path, mode, encoding="utf-8") as log:
        for step in range(start_step + 1, cfg.steps + 1):
            batch_rng = Xoshiro256StarStar(derive_seed(batch_stream_seed, step))
            batch_imgs = []
            batch_masks = []
            batch_targets = []
            for j in range(cfg.batch):
                index = batch_rng.next_below(n_images)
                global_index = (step - 1) * cfg.batch + j
                img, mask, targets = build_sample(cfg, images, index, global_index)
                batch_imgs.append(img)
                batch_masks.append(mask)
                batch_targets.append(targets)

            stacks = model_mod._stack_targets(mcfg, batch_targets)
            pt = model_mod._wrap(params)
            total, means, _counts = model_mod._loss_graph(
                pt, mcfg, np.stack(batch_imgs), batch_masks, stacks, cfg.metric, cfg.weights
            )
            total_val = float(total.data)
            if not np.isfinite(total_val):
                raise GradientError(
                    f"non-finite loss {total_val} at step {step}; aborting"
                )
            total.backward()
            grads = {
                name: (np.zeros_like(params.values[name]) if t.grad is None else t.grad)
                for name, t in pt.items()
            }
            lr = lr_at(step, cfg.steps, cfg.warmup_steps, cfg.base_lr)
            adamw_step(
                params,
                grads,
                state,
                lr,
                cfg.beta1,
                cfg.beta2,
                cfg.adam_eps,
                cfg.weight_decay,
            )
            cells = [str(step), repr(lr)]
            cells += [repr(m) for m in means]
            cells.append(repr(total_val))
            log.write("\t".join(cells) + "\n")

            if step % cfg.checkpoint_every == 0 and step != cfg.steps:
                save_checkpoint(out / f"ckpt_{step:06d}.wtns", params, state, step, cfg)

    save_checkpoint(final_path, params, state, cfg.steps, cfg)
    return TrainResult(
        final_checkpoint=final_path, log_path=log_path, steps_run=cfg.steps - start_step
    )
