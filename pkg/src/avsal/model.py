"""The full audio-visual saliency network and its ablation variants."""
from dataclasses import dataclass

import torch
from torch import nn

from .aggregation import N_BLOCKS, Aggregation, concat_cues
from .avlocation import AVLocation, Localization
from .config import VARIANTS
from .cuemaps import CenterPrior, SpatialAttention, TemporalAttention
from .encoders import AudioEncoder, VisualEncoder
from .layers import ResizeConv, uniform_map
from .losses import LossBreakdown, loss_a, loss_final, loss_fuse, loss_ms

INIT_STD = 0.05


@dataclass
class ForwardOutput:
    f_map: torch.Tensor  # [N, Hs, Ws]
    f_audio: torch.Tensor
    f_motion: list  # N_BLOCKS x [N, Hs, Ws]
    f_semantic: list
    f_center: torch.Tensor  # [Hs, Ws]
    m_conc: torch.Tensor  # [N, 10, Hs, Ws]
    g: torch.Tensor | None
    local: torch.Tensor | None
    fusion: torch.Tensor | None
    loc: Localization | None
    s_a: torch.Tensor | None
    visual: list
    motion_features: list
    spatial_weights: list
    variant: str


class SaliencyNet(nn.Module):
    def __init__(self, config):
        super().__init__()
        self.config = config
        self.variant = config.variant
        self.out_shape = config.output_shape
        self.visual = VisualEncoder(config.channels, n_frames=config.n_frames)
        self.audio = AudioEncoder(tuple(config.audio_channels) + (config.audio_dim,), config.audio_kernels)
        self.location = AVLocation(config.channels[-1], config.audio_dim)
        self.temporal = nn.ModuleList(TemporalAttention() for _ in range(N_BLOCKS))
        self.spatial = nn.ModuleList(SpatialAttention(c) for c in config.channels)
        h, w = self.out_shape
        self.center = CenterPrior((0.25 * min(h, w),) * 2)
        self.aggregation = Aggregation()

    def forward(self, frames, audio, variant=None):
        """``frames`` [N, 3, T, H, W]; ``audio`` [N, L], already Hanning-windowed."""
        variant = variant or self.variant
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if frames.dim() == 4:
            frames = frames[None]
        if audio.dim() == 1:
            audio = audio[None]
        shape = self.out_shape
        n = frames.shape[0]
        feats = self.visual(frames)

        if variant == "visual_only":
            s_a, loc = None, None
            f_audio = uniform_map((n, *shape), frames)
        else:
            s_a = self.audio(audio)
            loc = self.location(feats[-1], s_a, shape, inner_product=variant == "av_inner_product")
            f_audio = loc.f_audio

        motion_feats, f_motion = [], []
        if variant == "no_ta":
            f_motion = [uniform_map((n, *shape), frames) for _ in range(N_BLOCKS)]
        else:
            for att, s in zip(self.temporal, feats):
                m_t, f = att(s, shape)
                motion_feats.append(m_t)
                f_motion.append(f)

        weights, f_semantic = [], []
        if variant == "no_sa":
            f_semantic = [uniform_map((n, *shape), frames) for _ in range(N_BLOCKS)]
        else:
            for att, s in zip(self.spatial, feats):
                m_w, _, f = att(s, shape)
                weights.append(m_w)
                f_semantic.append(f)

        f_center = self.center(shape).to(frames.dtype)
        m_conc = concat_cues(f_audio, f_motion, f_semantic, f_center)
        f_map, g, local, fusion = self.aggregation(m_conc, concat_fusion=variant == "concat_fusion")
        return ForwardOutput(
            f_map, f_audio, f_motion, f_semantic, f_center, m_conc, g, local, fusion,
            loc, s_a, feats, motion_feats, weights, variant,
        )

    def losses(self, out, y, weights=None, eps=None):
        """Batch-mean loss terms; cue families severed by the variant contribute nothing."""
        weights = weights or self.config.weights
        eps = self.config.eps if eps is None else eps
        zero = torch.zeros(y.shape[0], dtype=y.dtype, device=y.device)
        if out.loc is None:
            l_a = zero
        else:
            # S_A is the regression target of the location term; letting that term
            # reach the audio encoder lets it shrink S_A to zero and erase the audio cue
            target = out.s_a.detach() if self.config.detach_audio_target else out.s_a
            l_a = loss_a(out.f_audio, y, out.loc.v_hat, target, eps)
        motion = [] if out.variant == "no_ta" else out.f_motion
        semantic = [] if out.variant == "no_sa" else out.f_semantic
        l_ms = loss_ms(motion, semantic, y, eps)
        l_fuse = loss_fuse(out.f_map, y, eps)
        return loss_final(l_a.mean(), l_ms.mean(), l_fuse.mean(), weights, eps)


def init_weights(model, seed):
    """Truncated normal (std 0.05, cut at 2 std) weights, zero biases; structural params at fixed values."""
    gen = torch.Generator().manual_seed(int(seed))
    for module in model.modules():
        if isinstance(module, (nn.Conv1d, nn.Conv2d, nn.Conv3d, nn.Linear)):
            with torch.no_grad():
                nn.init.trunc_normal_(module.weight, 0.0, INIT_STD, -2 * INIT_STD, 2 * INIT_STD, generator=gen)
                if module.bias is not None:
                    module.bias.zero_()
        elif isinstance(module, ResizeConv):
            with torch.no_grad():
                module.log_kernel.fill_(-2.0 * torch.log(torch.tensor(float(module.kernel_size))).item())
    h, w = model.out_shape
    with torch.no_grad():
        model.center.log_sigma.fill_(torch.log(torch.tensor(0.25 * min(h, w))).item())
    return model


def build_model(config):
    config.validate()
    return init_weights(SaliencyNet(config), config.seed)


__all__ = ["ForwardOutput", "LossBreakdown", "SaliencyNet", "build_model", "init_weights"]
