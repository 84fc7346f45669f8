"""Motion, semantic and center-bias cue maps."""
import math

import torch
from torch import nn

from .errors import ConfigError, ShapeError
from .layers import ResizeConv, normalize_map, pointwise, scaled_softplus


def motion_feature(s_vm):
    """Frame-wise similarity summed over time: sum_t (1 - (S_{t+1} - S_t)) on channel means.

    ``s_vm`` is [N, C, T, H, W]; returns ([N, H, W], channel-mean feature [N, T, H, W]).
    """
    if s_vm.shape[2] < 2:
        raise ShapeError(f"temporal attention needs T >= 2, got T={s_vm.shape[2]}")
    s_t = s_vm.mean(dim=1)
    without_first = s_t[:, 1:]
    without_last = s_t[:, :-1]
    return (1.0 - (without_first - without_last)).sum(dim=1), s_t


def channel_pool(s_vc):
    """[N, C, H, W] -> [N, 2, H, W] stacking channel max and channel mean."""
    return torch.cat([s_vc.amax(dim=1, keepdim=True), s_vc.mean(dim=1, keepdim=True)], dim=1)


class TemporalAttention(nn.Module):
    def __init__(self):
        super().__init__()
        self.score = pointwise(1, 1)
        self.upsample = ResizeConv()

    def forward(self, s_vm, out_shape):
        m_t, _ = motion_feature(s_vm)
        x = scaled_softplus(self.score(m_t[:, None]))
        return m_t, normalize_map(self.upsample(x, out_shape))[:, 0]


class SpatialAttention(nn.Module):
    def __init__(self, channels, kernel_size=7):
        super().__init__()
        self.weight_conv = nn.Conv2d(2, 1, kernel_size, padding=kernel_size // 2)
        self.score = pointwise(channels, 1)
        self.upsample = ResizeConv()

    def forward(self, s_vm, out_shape):
        """Returns (M_weight [N, H, W], M_S [N, C, H, W], F_semantic [N, Hs, Ws])."""
        s_vc = s_vm.mean(dim=2)
        m_weight = torch.sigmoid(self.weight_conv(channel_pool(s_vc)))
        m_s = s_vc * m_weight
        x = scaled_softplus(self.score(m_s))
        return m_weight[:, 0], m_s, normalize_map(self.upsample(x, out_shape))[:, 0]


def gaussian_prior(shape, sigma_x, sigma_y, center=None):
    """Unnormalized 2-D Gaussian density on the pixel grid; x runs along columns, y along rows."""
    h, w = shape
    y0, x0 = center if center is not None else ((h - 1) / 2.0, (w - 1) / 2.0)
    ref = sigma_x if torch.is_tensor(sigma_x) else torch.tensor(float(sigma_x))
    y = torch.arange(h, dtype=ref.dtype, device=ref.device)[:, None]
    x = torch.arange(w, dtype=ref.dtype, device=ref.device)[None, :]
    expo = (x - x0) ** 2 / (2 * sigma_x**2) + (y - y0) ** 2 / (2 * sigma_y**2)
    return torch.exp(-expo) / (2 * math.pi * sigma_x * sigma_y)


class CenterPrior(nn.Module):
    """Learnable center-bias Gaussian; sigma = exp(rho) keeps both deviations positive."""

    def __init__(self, sigma=(1.0, 1.0)):
        super().__init__()
        if min(sigma) <= 0:
            raise ConfigError("sigma", f"center-bias deviations must be positive, got {sigma}")
        self.log_sigma = nn.Parameter(torch.log(torch.tensor([float(s) for s in sigma])))

    @property
    def sigma(self):
        return self.log_sigma.exp()

    def forward(self, shape):
        sx, sy = self.sigma
        return normalize_map(gaussian_prior(shape, sx, sy))
