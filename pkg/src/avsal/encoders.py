"""Audio and visual encoders.

Small, randomly initialized stand-ins for the 1-D waveform network and the
3-D residual backbone: same topology (strided 1-D convolutions + temporal
max-pool; four residual 3-D blocks returning multi-scale features), far fewer
channels.
"""
import torch.nn.functional as F
from torch import nn

from .errors import ShapeError


class AudioEncoder(nn.Module):
    """Waveform [N, L] -> semantic feature S_A [N, D_a]."""

    def __init__(self, channels=(16, 32, 64, 64), kernels=(32, 16, 8, 8), stride=2):
        super().__init__()
        if len(channels) != len(kernels):
            raise ValueError("channels and kernels need the same length")
        layers = []
        in_ch = 1
        for out_ch, k in zip(channels, kernels):
            layers.append(nn.Conv1d(in_ch, out_ch, k, stride=stride))
            in_ch = out_ch
        self.convs = nn.ModuleList(layers)
        self.stride = stride
        self.out_dim = channels[-1]

    @property
    def receptive_field(self):
        rf, jump = 1, 1
        for conv in self.convs:
            rf += (conv.kernel_size[0] - 1) * jump
            jump *= conv.stride[0]
        return rf

    def forward(self, audio):
        if audio.dim() == 1:
            audio = audio[None]
        if audio.shape[-1] < self.receptive_field:
            raise ShapeError(
                f"audio of length {audio.shape[-1]} is shorter than the receptive field "
                f"({self.receptive_field} samples)"
            )
        x = audio[:, None, :]
        for conv in self.convs:
            x = F.relu(conv(x))
        return x.amax(dim=-1)


class ResBlock3d(nn.Module):
    """Two 3x3x3 convolutions with a projected shortcut; halves H and W, optionally T."""

    def __init__(self, in_ch, out_ch, temporal_stride=1):
        super().__init__()
        stride = (temporal_stride, 2, 2)
        self.conv1 = nn.Conv3d(in_ch, out_ch, 3, stride=stride, padding=1)
        self.conv2 = nn.Conv3d(out_ch, out_ch, 3, padding=1)
        self.shortcut = nn.Conv3d(in_ch, out_ch, 1, stride=stride)

    def forward(self, x):
        y = self.conv2(F.relu(self.conv1(x)))
        return F.relu(y + self.shortcut(x))


class VisualEncoder(nn.Module):
    """Frames [N, 3, T, H, W] -> [S_V^1, ..., S_V^4], each [N, C_m, T_m, H/2^m, W/2^m]."""

    def __init__(self, channels=(16, 32, 64, 128), temporal_strides=(1, 1, 2, 2), n_frames=16):
        super().__init__()
        if len(channels) != 4 or len(temporal_strides) != 4:
            raise ValueError("the visual encoder has exactly four blocks")
        blocks = []
        in_ch = 3
        for out_ch, ts in zip(channels, temporal_strides):
            blocks.append(ResBlock3d(in_ch, out_ch, ts))
            in_ch = out_ch
        self.blocks = nn.ModuleList(blocks)
        self.channels = tuple(channels)
        self.n_frames = n_frames

    def forward(self, frames):
        if frames.dim() == 4:
            frames = frames[None]
        _, c, t, h, w = frames.shape
        if c != 3 or t != self.n_frames:
            raise ShapeError(f"expected frames [N, 3, {self.n_frames}, H, W], got {tuple(frames.shape)}")
        if h % 16 or w % 16:
            raise ShapeError(f"frame size {h}x{w} must be divisible by 16")
        feats = []
        x = frames
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return feats
