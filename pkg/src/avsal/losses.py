"""Training objectives: regularized KL terms and their weighted combination."""
from dataclasses import dataclass

import torch

from .avlocation import location_loss
from .errors import ShapeError

EPS = 1e-7


def kl_term(f, y, eps=EPS):
    """sum Y * log(Y / (F + eps) + eps) over the last two dims, with 0 * log(.) := 0.

    Returns one value per leading index (a scalar tensor for 2-D maps).
    """
    if f.shape != y.shape:
        raise ShapeError(f"prediction {tuple(f.shape)} vs target {tuple(y.shape)}")
    positive = y > 0
    safe_y = torch.where(positive, y, torch.ones_like(y))
    terms = torch.where(positive, y * torch.log(safe_y / (f + eps) + eps), torch.zeros_like(y))
    return terms.sum(dim=(-2, -1))


def loss_a(f_audio, y, v_hat, s_a, eps=EPS):
    return kl_term(f_audio, y, eps) + location_loss(v_hat, s_a)


def loss_ms(f_motion, f_semantic, y, eps=EPS):
    """Sum of KL terms over every supervised motion and semantic map (either set may be empty)."""
    total = torch.zeros(y.shape[:-2], dtype=y.dtype, device=y.device)
    for f in list(f_motion) + list(f_semantic):
        total = total + kl_term(f, y, eps)
    return total


def loss_fuse(f_map, y, eps=EPS):
    return kl_term(f_map, y, eps)


@dataclass
class LossBreakdown:
    l_a: torch.Tensor
    l_ms: torch.Tensor
    l_fuse: torch.Tensor
    l_final: torch.Tensor
    weights: tuple = (1.0, 1.0, 1.0)
    eps: float = EPS

    def as_floats(self):
        return {k: float(getattr(self, k).detach()) for k in ("l_a", "l_ms", "l_fuse", "l_final")}


def loss_final(l_a, l_ms, l_fuse, weights=(1.0, 1.0, 1.0), eps=EPS):
    w1, w2, w3 = weights
    return LossBreakdown(l_a, l_ms, l_fuse, w1 * l_a + w2 * l_ms + w3 * l_fuse, tuple(weights), eps)
