"""Command-line entry point: ``campro <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import boundary, cache, fusion, pipeline, wavelet
from .errors import CamproError
from .metrics import MetricConfig


def _add_data_flags(p, preds=False, edges=False):
    p.add_argument("--dataset", default="dataset", help="dataset name used in cache paths and tables")
    p.add_argument("--images", type=Path, help="directory of input images")
    p.add_argument("--gts", type=Path, help="directory of ground-truth masks")
    if preds:
        p.add_argument("--preds", type=Path, help="directory of prediction maps")
    if edges:
        p.add_argument("--edges", type=Path, help="directory of predicted edge maps")


def _add_common(p):
    p.add_argument("--cache", default=None, help="cache root (CAMPRO_CACHE overrides)")
    p.add_argument("--out", type=Path, default=Path("campro-out"), help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="fmt", choices=("csv", "md"), default="csv")
    p.add_argument("--d1", type=int, default=3, help="inner dilation kernel")
    p.add_argument("--d2", type=int, default=5, help="outer dilation kernel")
    p.add_argument("--mode", choices=boundary.EGEM_MODES, default="binary")
    p.add_argument("--offset", type=int, default=boundary.DEFAULT_OFFSET)
    p.add_argument("--subband", choices=wavelet.SUBBANDS, default="HH")
    p.add_argument("--canny-sigma", type=float, default=1.4)
    p.add_argument("--canny-low", type=float, default=50.0)
    p.add_argument("--canny-high", type=float, default=150.0)
    p.add_argument("--jitter", type=int, default=0, help="max random box jitter in pixels")
    p.add_argument("--png", action="store_true", help="also dump prompts as PNG")
    p.add_argument("--polyp", action="store_true", help="add mDice/mIoU columns")
    p.add_argument("--dice-mode", choices=("binary", "continuous"), default="binary")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="campro", description="Boundary and box prompts, Haar subbands, fusion checks and segmentation metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="cache boundary-with-gradient and box prompts")
    _add_data_flags(p)
    _add_common(p)

    p = sub.add_parser("prompt-gen", help="generated boundaries from predicted edge maps")
    _add_data_flags(p, edges=True)
    _add_common(p)

    p = sub.add_parser("dwt", help="dump Haar subbands of every image")
    _add_data_flags(p)
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    _add_data_flags(p, preds=True)
    _add_common(p)

    p = sub.add_parser("ablate", help="dilate / offset / subband sweeps")
    _add_data_flags(p, preds=True, edges=True)
    _add_common(p)
    p.add_argument("--axis", choices=pipeline.AXES, required=True)

    p = sub.add_parser("fuse-smoke", help="check the fusion shape chain on synthetic embeddings")
    _add_common(p)
    p.add_argument("--scale", choices=("desk", "reference"), default="desk")
    p.add_argument("--shape", type=int, nargs=3, metavar=("C", "H", "W"), help="override embedding shape")
    p.add_argument("--hf-channels", type=int)
    p.add_argument("--out-channels", type=int)
    return parser


def config_from_args(args) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        mode=args.mode,
        d1=args.d1,
        d2=args.d2,
        offset=args.offset,
        subband=args.subband,
        metrics=MetricConfig(dice_mode=args.dice_mode),
        canny_sigma=args.canny_sigma,
        canny_low=args.canny_low,
        canny_high=args.canny_high,
        box_jitter=args.jitter,
        seed=args.seed,
        workers=args.workers,
        fmt=args.fmt,
        cache_root=cache.default_root(args.cache),
        out_dir=args.out,
        write_png=args.png,
        polyp=args.polyp,
    )


def manifest_from_args(args) -> pipeline.DatasetManifest:
    gt_dir = args.gts
    if gt_dir is None:
        if args.command == "dwt" and args.images is not None:
            gt_dir = args.images
        else:
            raise CamproError("--gts is required")
    return pipeline.DatasetManifest(
        name=args.dataset,
        gt_dir=gt_dir,
        image_dir=args.images,
        pred_dir=getattr(args, "preds", None),
        edge_dir=getattr(args, "edges", None),
    )


def run(args) -> int:
    cfg = config_from_args(args)
    if args.command == "fuse-smoke":
        shape = tuple(args.shape) if args.shape else (fusion.REFERENCE_SHAPE if args.scale == "reference" else (8, 16, 16))
        summary = pipeline.cmd_fuse_smoke(cfg, shape, args.hf_channels, args.out_channels)
    else:
        manifest = manifest_from_args(args)
        if args.command == "precompute":
            summary = pipeline.cmd_precompute(manifest, cfg)
        elif args.command == "prompt-gen":
            summary = pipeline.cmd_prompt_gen(manifest, cfg)
        elif args.command == "dwt":
            summary = pipeline.cmd_dwt(manifest, cfg)
        elif args.command == "eval":
            _, summary = pipeline.cmd_eval(manifest, cfg)
        else:
            _, summary = pipeline.cmd_ablate(manifest, cfg, args.axis)
    print(summary.to_text())
    return 0 if summary.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except CamproError as exc:
        print(f"campro: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
