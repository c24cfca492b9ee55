"""Command-line interface.

Subcommands: ``dwt`` (forward/inverse transform of a netpbm image),
``targets`` (reconstruction targets + per-scale masks for one image),
``pretrain`` (the optimization loop), ``verify`` (property suites), and
``synth`` (write the synthetic corpus). ``--config``, ``--seed``, and
``--out`` are shared; ``--seed``/``--out`` override the config file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..dwt import WaveletPyramid, dwt2_multi, idwt2_multi
from ..errors import WavemimError
from ..masking import gen_block_mask, rescale_mask
from ..rng import derive_seed
from ..targets import build_targets, normalize_targets
from . import container, netpbm, synth, viz
from .config import RunConfig, load_config, level_selection, validate
from .train import pretrain
from .verify import run_suites


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out"] = str(args.out)
    if overrides:
        cfg = replace(cfg, **overrides)
    validate(cfg)
    return cfg


def _cmd_dwt(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.inverse:
        records = container.read_records(args.input)
        by_name = dict(records)
        depth = max(
            int(name[1:].split("_")[0]) for name, _ in records if name.startswith("L")
        )
        details = [
            tuple(by_name[f"L{level}_{o}"] for o in ("H", "V", "D"))
            for level in range(1, depth + 1)
        ]
        approx = by_name["approx"]
        channels = approx.shape[0]
        rows = approx.shape[1] << depth
        cols = approx.shape[2] << depth
        pyramid = WaveletPyramid(
            depth=depth,
            details=details,
            approx=approx,
            source_shape=(channels, rows, cols),
        )
        image = idwt2_multi(pyramid)
        ext = "ppm" if channels == 3 else "pgm"
        dest = out / f"reconstructed.{ext}"
        netpbm.write_image(dest, image)
        print(f"wrote {dest}")
        return 0

    image = netpbm.read_image(args.input)
    pyramid = dwt2_multi(image, args.levels)
    dest = out / "pyramid.wtns"
    container.write_records(dest, pyramid.iter_planes())
    print(f"wrote {dest} ({3 * args.levels + 1} plane records)")
    if args.viz:
        for name, plane in pyramid.iter_planes():
            to_u8 = viz.approx_to_u8 if name == "approx" else viz.detail_to_u8
            for ch in range(plane.shape[0]):
                path = out / f"{name}_c{ch}.pgm"
                netpbm.write_u8(path, to_u8(plane[ch]))
        print(f"wrote per-plane visualizations under {out}")
    return 0


def _cmd_targets(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out) if args.out else Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    image = netpbm.read_image(args.input)
    if image.shape != (cfg.channels, cfg.image_side, cfg.image_side):
        raise WavemimError(
            f"input image shape {image.shape} does not match configured "
            f"({cfg.channels}, {cfg.image_side}, {cfg.image_side})"
        )
    pyramid = dwt2_multi(image, cfg.levels)
    targets = normalize_targets(build_targets(pyramid, level_selection(cfg)))
    mask = gen_block_mask(cfg.grid, cfg.ratio, cfg.block, cfg.seed)
    records = [
        (f"target_k{k}", entry.values)
        for k, entry in enumerate(targets.entries, start=1)
    ]
    records.append((f"mask_g{cfg.grid}", mask.flags))
    for side in dict.fromkeys(targets.sides()):  # unique, order kept
        if side != cfg.grid:
            records.append((f"mask_g{side}", rescale_mask(mask, side).flags))
    dest = out / "targets.wtns"
    container.write_records(dest, records)
    print(f"wrote {dest} ({len(records)} records)")
    return 0


def _cmd_pretrain(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out) if args.out else Path(cfg.out)
    resume = Path(args.resume) if args.resume else None
    result = pretrain(cfg, out, resume=resume)
    print(
        f"trained {result.steps_run} steps; final checkpoint {result.final_checkpoint}, "
        f"log {result.log_path}"
    )
    return 0


def _cmd_verify(args) -> int:
    results = run_suites(args.suite)
    failed = False
    for suite in results:
        for line in suite.lines():
            print(line)
        failed = failed or not suite.passed
    print("verify:", "FAIL" if failed else "PASS")
    return 1 if failed else 0


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 42
    paths = synth.write_corpus(args.out, args.count, args.side, seed)
    print(f"wrote {len(paths)} images under {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavemim",
        description="Multi-level wavelet reconstruction targets for masked "
        "image modeling: transform, targets, training, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dwt = sub.add_parser("dwt", help="forward/inverse wavelet transform of a netpbm image")
    p_dwt.add_argument("input", help="P5/P6 image (or pyramid container with --inverse)")
    p_dwt.add_argument("--levels", type=int, default=5, help="decomposition depth")
    p_dwt.add_argument("--out", required=True, help="output directory")
    p_dwt.add_argument("--viz", action="store_true", help="write per-plane grayscale PGMs")
    p_dwt.add_argument(
        "--inverse", action="store_true", help="treat input as a pyramid container and invert"
    )
    p_dwt.set_defaults(func=_cmd_dwt)

    p_targets = sub.add_parser("targets", help="write reconstruction targets + masks for one image")
    p_targets.add_argument("input", help="P5/P6 image")
    p_targets.add_argument("--config", help="config file")
    p_targets.add_argument("--seed", type=int, help="override run.seed")
    p_targets.add_argument("--out", help="output directory (defaults to run.out)")
    p_targets.set_defaults(func=_cmd_targets)

    p_train = sub.add_parser("pretrain", help="run the pre-training loop")
    p_train.add_argument("--config", help="config file")
    p_train.add_argument("--seed", type=int, help="override run.seed")
    p_train.add_argument("--out", help="output directory (defaults to run.out)")
    p_train.add_argument("--resume", help="checkpoint to resume from")
    p_train.set_defaults(func=_cmd_pretrain)

    p_verify = sub.add_parser("verify", help="run property suites")
    p_verify.add_argument(
        "suite", choices=["dwt", "oracle", "grad", "mask", "loss", "all"]
    )
    p_verify.set_defaults(func=_cmd_verify)

    p_synth = sub.add_parser("synth", help="write the synthetic corpus as PPMs")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--count", type=int, default=256)
    p_synth.add_argument("--side", type=int, default=32)
    p_synth.add_argument("--seed", type=int, help="corpus seed (default 42)")
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WavemimError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
