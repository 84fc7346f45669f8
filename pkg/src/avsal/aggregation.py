"""Multi-cue aggregation: global/local channel context, channel-wise fusion, readout."""
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ShapeError
from .layers import BatchNorm, pointwise

N_BLOCKS = 4
CUE_CHANNELS = ("audio",) + tuple(f"motion{m}" for m in range(1, N_BLOCKS + 1)) + tuple(
    f"semantic{m}" for m in range(1, N_BLOCKS + 1)
) + ("center",)


def concat_cues(f_audio, f_motion, f_semantic, f_center):
    """Stack cue maps as [N, 10, H, W] in the order of ``CUE_CHANNELS``.

    ``f_motion`` / ``f_semantic`` are sequences of four [N, H, W] maps;
    ``f_center`` may be a single [H, W] map shared by the batch.
    """
    if len(f_motion) != N_BLOCKS or len(f_semantic) != N_BLOCKS:
        raise ShapeError(f"expected {N_BLOCKS} motion and semantic maps")
    n, h, w = f_audio.shape
    if f_center.dim() == 2:
        f_center = f_center.expand(n, h, w)
    maps = [f_audio, *f_motion, *f_semantic, f_center]
    for name, m in zip(CUE_CHANNELS, maps):
        if tuple(m.shape) != (n, h, w):
            raise ShapeError(f"cue map {name!r} has shape {tuple(m.shape)}, expected {(n, h, w)}")
    return torch.stack(maps, dim=1)


class GlobalContext(nn.Module):
    """g = sigmoid(BN(PWC(sigmoid(BN(PWC(GAP(M)))))))."""

    def __init__(self, channels=len(CUE_CHANNELS), ratio=2):
        super().__init__()
        mid = channels // ratio
        self.pwc1 = pointwise(channels, mid)
        self.bn1 = BatchNorm(mid)
        self.pwc2 = pointwise(mid, channels)
        self.bn2 = BatchNorm(channels)

    def forward(self, m_conc):
        x = m_conc.mean(dim=(-2, -1), keepdim=True)
        x = torch.sigmoid(self.bn1(self.pwc1(x)))
        x = torch.sigmoid(self.bn2(self.pwc2(x)))
        return x[:, :, 0, 0]


class LocalContext(nn.Module):
    """L = BN(PWC(ReLU(BN(PWC(M))))); per-pixel channel mixing only."""

    def __init__(self, channels=len(CUE_CHANNELS), ratio=2):
        super().__init__()
        mid = channels // ratio
        self.pwc1 = pointwise(channels, mid)
        self.bn1 = BatchNorm(mid)
        self.pwc2 = pointwise(mid, channels)
        self.bn2 = BatchNorm(channels)

    def forward(self, m_conc):
        return self.bn2(self.pwc2(F.relu(self.bn1(self.pwc1(m_conc)))))


def fuse(g, local):
    """Channel-wise product g[c] * L[c]."""
    return g[:, :, None, None] * local


def spatial_softmax(logits):
    n = logits.shape[0]
    return torch.softmax(logits.reshape(n, -1), dim=-1).reshape(logits.shape)


class Readout(nn.Module):
    """Three 1x1 convolutions (ReLU between) to one logit channel, then a spatial softmax."""

    def __init__(self, widths=(len(CUE_CHANNELS), 8, 4, 1)):
        super().__init__()
        self.convs = nn.ModuleList(pointwise(a, b) for a, b in zip(widths[:-1], widths[1:]))

    def logits(self, x):
        for i, conv in enumerate(self.convs):
            x = conv(x)
            if i < len(self.convs) - 1:
                x = F.relu(x)
        return x[:, 0]

    def forward(self, x):
        return spatial_softmax(self.logits(x))


class Aggregation(nn.Module):
    def __init__(self, channels=len(CUE_CHANNELS)):
        super().__init__()
        self.global_context = GlobalContext(channels)
        self.local_context = LocalContext(channels)
        self.readout = Readout((channels, 8, 4, 1))

    def forward(self, m_conc, concat_fusion=False):
        """Returns (F_map, g, L, M_fusion); the middle three are None under ``concat_fusion``."""
        if concat_fusion:
            return self.readout(m_conc), None, None, None
        g = self.global_context(m_conc)
        local = self.local_context(m_conc)
        fusion = fuse(g, local)
        return self.readout(fusion), g, local, fusion
