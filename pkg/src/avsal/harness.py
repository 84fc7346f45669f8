"""Training, sliding-window inference, evaluation and ablation runs."""
import csv
import logging
from dataclasses import astuple, dataclass, field

import numpy as np
import torch

from . import checkpoint as ckpt_io
from .avdata import load_dataset, window_audio
from .config import replace
from .errors import DatasetError, ShapeError
from .metrics import MetricReport, compute_metrics, write_report
from .model import build_model

log = logging.getLogger(__name__)


def set_determinism(enabled=True):
    if enabled:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)


@dataclass
class ClipBatch:
    """Stacked model inputs: frames [N, 3, T, H, W], windowed audio [N, L], targets [N, Hs, Ws]."""

    frames: torch.Tensor
    audio: torch.Tensor
    targets: torch.Tensor
    clips: list = field(default_factory=list)

    def __len__(self):
        return self.frames.shape[0]


def clip_inputs(clip, config):
    frames = torch.from_numpy(np.ascontiguousarray(clip.frames.transpose(1, 0, 2, 3), dtype=np.float32))
    win = config.audio_window
    audio = window_audio(clip.audio, clip.audio.shape[0] // 2, win).astype(np.float32)
    return frames, torch.from_numpy(audio)


def stack_clips(clips, config):
    if not clips:
        raise DatasetError(config.dataset_path or "<memory>", "no clips")
    frames, audio, targets = [], [], []
    for clip in clips:
        f, a = clip_inputs(clip, config)
        if tuple(f.shape[-2:]) != tuple(config.frame_size):
            raise ShapeError(f"clip frames {tuple(f.shape[-2:])} do not match frame_size {config.frame_size}")
        if tuple(clip.fixation_map.shape) != config.output_shape:
            raise ShapeError(
                f"fixation map {clip.fixation_map.shape} does not match output shape {config.output_shape}"
            )
        frames.append(f)
        audio.append(a)
        targets.append(torch.from_numpy(clip.fixation_map.astype(np.float32)))
    return ClipBatch(torch.stack(frames), torch.stack(audio), torch.stack(targets), list(clips))


def train(config, out_path=None, clips=None, on_epoch=None):
    """Minimize the weighted loss with Adam. Returns (Checkpoint, per-epoch history)."""
    config.validate()
    set_determinism(config.deterministic)
    if clips is None:
        clips = [c for _, c in load_dataset(config.dataset_path)]
    data = stack_clips(clips, config)
    model = build_model(config)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999))
    gen = torch.Generator().manual_seed(config.seed)
    history = []
    ckpt = None
    for epoch in range(1, config.epochs + 1):
        order = torch.randperm(len(data), generator=gen)
        sums = dict.fromkeys(("l_a", "l_ms", "l_fuse", "l_final"), 0.0)
        for start in range(0, len(data), config.batch_size):
            idx = order[start:start + config.batch_size]
            out = model(data.frames[idx], data.audio[idx])
            losses = model.losses(out, data.targets[idx])
            opt.zero_grad()
            losses.l_final.backward()
            opt.step()
            for k, v in losses.as_floats().items():
                sums[k] += v * len(idx)
        record = {"epoch": epoch, **{k: v / len(data) for k, v in sums.items()}}
        history.append(record)
        log.info(
            "epoch %d  L_A=%.4f  L_MS=%.4f  L_fuse=%.4f  L_final=%.4f",
            epoch, record["l_a"], record["l_ms"], record["l_fuse"], record["l_final"],
        )
        ckpt = ckpt_io.from_model(model, epoch, gen.get_state().numpy().tobytes())
        if out_path is not None:
            ckpt_io.save_checkpoint(out_path, ckpt)
        if on_epoch is not None:
            on_epoch(record, model)
    return ckpt, history


def _as_model(model_or_ckpt):
    if isinstance(model_or_ckpt, ckpt_io.Checkpoint):
        return model_or_ckpt.model()
    return model_or_ckpt


@torch.no_grad()
def predict_clip(model, clip, variant=None):
    """F_map for the clip's own 16-frame window (audio centered on its middle frame)."""
    model = _as_model(model)
    frames, audio = clip_inputs(clip, model.config)
    return model(frames[None], audio[None], variant).f_map[0].double().numpy()


def window_indices(i, n_frames):
    """Trailing window of ``n_frames`` ending at frame ``i``, clamp-replicated at the start."""
    return np.clip(np.arange(i - n_frames + 1, i + 1), 0, None)


def audio_center(i, n_frames, samples_per_frame, n_samples, window_len):
    """Sample at the middle of frame window ending at ``i``, clamped so the window stays inside the audio."""
    center = (i - n_frames + 1 + n_frames // 2) * samples_per_frame
    lo, hi = window_len // 2, n_samples - window_len + window_len // 2
    if hi < lo:
        return n_samples // 2
    return int(np.clip(center, lo, hi))


@torch.no_grad()
def predict_video(model, frames, audio, variant=None):
    """One saliency map per frame of ``frames`` [3, N, H, W] using trailing sliding windows."""
    model = _as_model(model)
    cfg = model.config
    frames = torch.as_tensor(np.asarray(frames, dtype=np.float32))
    audio = np.asarray(audio, dtype=np.float64)
    if frames.dim() != 4 or frames.shape[0] != 3:
        raise ShapeError(f"expected frames [3, N, H, W], got {tuple(frames.shape)}")
    n = frames.shape[1]
    spf = cfg.sample_rate // cfg.frame_rate
    maps = []
    for i in range(n):
        clip_frames = frames[:, torch.from_numpy(window_indices(i, cfg.n_frames))]
        center = audio_center(i, cfg.n_frames, spf, audio.shape[0], cfg.audio_window)
        win = torch.from_numpy(window_audio(audio, center, cfg.audio_window).astype(np.float32))
        # one window per forward pass: batch statistics must not mix windows
        maps.append(model(clip_frames[None], win[None], variant).f_map[0].double().numpy())
    return maps


def evaluate(model, clips, variant=None, report_path=None, predict_fn=None, seed=0):
    """Per-clip MetricReports (+ mean). ``clips`` is a dataset path or [(clip_id, AVClip)]."""
    if isinstance(clips, (str, bytes)) or hasattr(clips, "__fspath__"):
        clips = load_dataset(clips)
    if not clips:
        raise DatasetError("<memory>", "no clips to evaluate")
    if predict_fn is None:
        model = _as_model(model)

        def predict_fn(clip):
            return predict_clip(model, clip, variant)

    rows = []
    for i, (clip_id, clip) in enumerate(clips):
        others = [p for j, (_, c) in enumerate(clips) if j != i for p in c.fixation_points]
        if not others:
            others = clip.fixation_points
        pred = predict_fn(clip)
        rows.append((clip_id, compute_metrics(pred, clip.fixation_map, clip.fixation_points, others, seed + i)))
    if report_path is not None:
        mean = write_report(report_path, rows)
    else:
        mean = MetricReport.mean([r for _, r in rows])
    return rows, mean


def run_ablation(config, variants, report_path=None, train_clips=None, test_clips=None):
    """Train and evaluate each variant; returns {variant: mean MetricReport}."""
    if test_clips is None:
        test_clips = load_dataset(config.test_path or config.dataset_path)
    results = {}
    for variant in variants:
        cfg = replace(config, variant=variant)
        ckpt, _ = train(cfg, clips=train_clips)
        _, results[variant] = evaluate(ckpt, test_clips, variant)
    if report_path is not None:
        with open(report_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "cc", "nss", "auc_j", "sauc", "sim"])
            for variant, rep in results.items():
                writer.writerow([variant, *(f"{v:.6f}" for v in astuple(rep))])
    return results
