import math

import torch
import torch.nn.functional as F
from torch import nn


def normalize_map(x):
    """Scale each map over its last two dims to sum to 1."""
    return x / x.sum(dim=(-2, -1), keepdim=True)


def uniform_map(shape, like):
    """Uniform distribution maps of ``shape`` (..., H, W) matching ``like``'s dtype/device."""
    h, w = shape[-2:]
    return torch.full(shape, 1.0 / (h * w), dtype=like.dtype, device=like.device)


def log_softplus(x):
    """log(softplus(x)), exact to float precision even where softplus underflows."""
    safe = torch.clamp(x, min=-20.0)
    return torch.where(x > -20.0, torch.log(F.softplus(safe)), x)


def scaled_softplus(x):
    """softplus(x) divided by its per-map maximum; same map after normalization, never all-zero."""
    ls = log_softplus(x)
    return torch.exp(ls - ls.amax(dim=(-2, -1), keepdim=True))


def resize(x, size):
    """Nearest-neighbor upsampling, area averaging when shrinking. ``x`` is [N, C, H, W]."""
    h, w = x.shape[-2:]
    if (h, w) == tuple(size):
        return x
    if size[0] >= h and size[1] >= w:
        return F.interpolate(x, size=tuple(size), mode="nearest")
    if size[0] <= h and size[1] <= w:
        return F.interpolate(x, size=tuple(size), mode="area")
    raise ValueError(f"mixed up/down resize {h}x{w} -> {size}")


class ResizeConv(nn.Module):
    """Resize followed by a learnable 3x3 convolution (no transposed convolution).

    The kernel is kept positive through an exponential parameterization so a
    nonnegative input stays nonnegative, and starts as a box filter. Replicate
    padding keeps constant maps constant.
    """

    def __init__(self, kernel_size=3):
        super().__init__()
        self.kernel_size = kernel_size
        self.log_kernel = nn.Parameter(torch.full((1, 1, kernel_size, kernel_size), -2.0 * math.log(kernel_size)))

    def forward(self, x, size):
        x = resize(x, size)
        pad = self.kernel_size // 2
        x = F.pad(x, (pad, pad, pad, pad), mode="replicate")
        return F.conv2d(x, self.log_kernel.exp())


class BatchNorm(nn.Module):
    """Batch normalization that always normalizes with the statistics of the current batch.

    Statistics are taken over every axis except channels. A channel with a
    single value (or zero variance) normalizes to zero, i.e. the output falls
    back to the learned shift.
    """

    def __init__(self, channels, eps=1e-5):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))

    def forward(self, x):
        dims = [d for d in range(x.dim()) if d != 1]
        mean = x.mean(dim=dims, keepdim=True)
        var = ((x - mean) ** 2).mean(dim=dims, keepdim=True)
        shape = [1, -1] + [1] * (x.dim() - 2)
        return (x - mean) / torch.sqrt(var + self.eps) * self.weight.view(shape) + self.bias.view(shape)


def pointwise(in_ch, out_ch, bias=True):
    return nn.Conv2d(in_ch, out_ch, kernel_size=1, bias=bias)
