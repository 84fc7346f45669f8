"""Sounding-object localization: attention of the audio embedding over block-4 cells."""
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ShapeError
from .layers import ResizeConv, normalize_map


def pool_visual(s_v4):
    """[N, C, T, H, W] -> V [N, B=H*W, C]; temporal mean, cells in row-major order."""
    return s_v4.mean(dim=2).flatten(2).transpose(1, 2)


class MLP2(nn.Module):
    """affine -> ReLU -> affine."""

    def __init__(self, in_dim, hidden_dim, out_dim):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, hidden_dim)
        self.fc2 = nn.Linear(hidden_dim, out_dim)

    def forward(self, x):
        if x.shape[-1] != self.fc1.in_features:
            raise ShapeError(f"expected last dim {self.fc1.in_features}, got {x.shape[-1]}")
        return self.fc2(F.relu(self.fc1(x)))


def sounding_scores(v, h_a, w1=None, w2=None):
    """a_b = <W1 v_b, W2 h_A>; plain inner product when the maps are omitted."""
    if w1 is not None:
        v = w1(v)
    if w2 is not None:
        h_a = w2(h_a)
    return torch.einsum("nbd,nd->nb", v, h_a)


def context_vector(alpha, v):
    """h_z = sum_b alpha_b v_b."""
    return torch.einsum("nb,nbd->nd", alpha, v)


def location_loss(v_hat, s_a):
    """Euclidean distance between the projected context and the audio feature (per sample)."""
    if v_hat.shape != s_a.shape:
        raise ShapeError(f"v_hat {tuple(v_hat.shape)} vs S_A {tuple(s_a.shape)}")
    return torch.linalg.vector_norm(v_hat - s_a, dim=-1)


def audio_saliency(alpha, grid, out_shape, upsample):
    """Reshape alpha [N, B] onto the cell grid and resize-convolve it up to ``out_shape``."""
    if out_shape[0] < grid[0] or out_shape[1] < grid[1]:
        raise ValueError(f"output {tuple(out_shape)} is smaller than the {tuple(grid)} cell grid")
    a = alpha.reshape(alpha.shape[0], 1, *grid)
    return normalize_map(upsample(a, out_shape))[:, 0]


@dataclass
class Localization:
    v: torch.Tensor
    h_a: torch.Tensor
    a_raw: torch.Tensor
    alpha: torch.Tensor
    f_audio: torch.Tensor
    h_z: torch.Tensor
    v_hat: torch.Tensor


class AVLocation(nn.Module):
    def __init__(self, visual_dim, audio_dim):
        super().__init__()
        d_h = visual_dim
        self.embed = MLP2(audio_dim, d_h, d_h)
        self.w1 = nn.Linear(d_h, d_h, bias=False)
        self.w2 = nn.Linear(d_h, d_h, bias=False)
        self.project = MLP2(d_h, d_h, audio_dim)
        self.upsample = ResizeConv()

    def forward(self, s_v4, s_a, out_shape, inner_product=False):
        v = pool_visual(s_v4)
        h_a = self.embed(s_a)
        if inner_product:
            a_raw = sounding_scores(v, h_a)
        else:
            a_raw = sounding_scores(v, h_a, self.w1, self.w2)
        alpha = torch.softmax(a_raw, dim=-1)
        f_audio = audio_saliency(alpha, s_v4.shape[-2:], out_shape, self.upsample)
        h_z = context_vector(alpha, v)
        v_hat = self.project(h_z)
        return Localization(v, h_a, a_raw, alpha, f_audio, h_z, v_hat)
