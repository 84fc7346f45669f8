"""Command-line entry point: gen-data, train, eval, predict, ablate."""
import argparse
import csv
import logging
import sys
from dataclasses import astuple
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .aggregation import CUE_CHANNELS
from .avdata import generate_clips, load_dataset, write_array, write_dataset
from .checkpoint import load_checkpoint
from .config import VARIANTS, load_config, load_scene_family
from .errors import ConfigError, DatasetError, ShapeError
from .harness import clip_inputs, evaluate, predict_video, run_ablation, set_determinism, train

log = logging.getLogger("avsal")


def to_gray_image(saliency):
    """Min-max scale a 2-D map to 8-bit grayscale; a constant map becomes black."""
    m = np.asarray(saliency, dtype=np.float64)
    lo, hi = m.min(), m.max()
    scaled = np.zeros_like(m) if hi == lo else (m - lo) / (hi - lo)
    return Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L")


def save_map(stem, saliency):
    to_gray_image(saliency).save(f"{stem}.png")
    write_array(f"{stem}.bin", np.asarray(saliency, dtype=np.float32))


def cmd_gen_data(args):
    family = load_scene_family(args.spec)
    clips = generate_clips(family, args.n, args.seed)
    write_dataset(args.out, clips)
    log.info("wrote %d clips to %s", len(clips), args.out)


def cmd_train(args):
    config = load_config(args.config)
    ckpt, history = train(config, out_path=args.out)
    log.info("finished %d epochs; checkpoint at %s", ckpt.epoch, args.out)


def cmd_eval(args):
    ckpt = load_checkpoint(args.ckpt)
    _, mean = evaluate(ckpt, args.data, args.variant, report_path=args.report, seed=args.seed)
    names = ("cc", "nss", "auc_j", "sauc", "sim")
    print("  ".join(f"{n}={v:.4f}" for n, v in zip(names, astuple(mean))))


@torch.no_grad()
def cmd_predict(args):
    ckpt = load_checkpoint(args.ckpt)
    model = ckpt.model()
    out_dir = Path(args.out)
    for clip_id, clip in load_dataset(args.data):
        clip_dir = out_dir / clip_id
        clip_dir.mkdir(parents=True, exist_ok=True)
        frames = clip.frames.transpose(1, 0, 2, 3)
        for i, saliency in enumerate(predict_video(model, frames, clip.audio, args.variant)):
            save_map(clip_dir / f"frame_{i:04d}", saliency)
        if args.cues:
            f, a = clip_inputs(clip, model.config)
            out = model(f[None], a[None], args.variant)
            for name, cue in zip(CUE_CHANNELS, out.m_conc[0]):
                save_map(clip_dir / f"cue_{name}", cue.double().numpy())
        log.info("%s: %d maps", clip_id, clip.frames.shape[0])


def cmd_ablate(args):
    config = load_config(args.config)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError("variants", f"unknown variant {v!r}; expected one of {VARIANTS}")
    results = run_ablation(config, variants, report_path=args.report)
    writer = csv.writer(sys.stdout)
    for v, rep in results.items():
        writer.writerow([v, *(f"{x:.4f}" for x in astuple(rep))])


def build_parser():
    parser = argparse.ArgumentParser(prog="avsal", description="Audio-visual saliency prediction")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="render a synthetic dataset")
    p.add_argument("--spec", required=True, help="scene family key=value file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (rewritten every epoch)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--seed", type=int, default=0, help="sAUC negative sampling seed")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write per-frame saliency maps")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--cues", action="store_true", help="also export the ten cue maps of each clip")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="train and evaluate several variants")
    p.add_argument("--config", required=True)
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    set_determinism(True)
    try:
        args.func(args)
    except (ConfigError, DatasetError, ShapeError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
