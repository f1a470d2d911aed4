"""Convolutional encoders/decoders and Gaussian output heads.

The conv stacks follow the usual strided-conv/transposed-conv recipe:
kernel 4, stride 2 halvings down to (or up from) a 4x4 map, closed by a
valid 4x4 convolution. That gives log2(size) - 1 layers (5 at 64px, 6 at
128px). ELU keeps the stacks C1-smooth so numerical gradient checks stay
meaningful.
"""
from __future__ import annotations

import math

import torch
import torch.nn as nn
from torch import Tensor

from ..gaussian import GaussianParams

STD_MIN = 1e-4
STD_MAX = 10.0


def _check_size(size: int, kind: str) -> int:
    n = int(math.log2(size))
    if 2**n != size or size < 8:
        raise ValueError(f"{kind} size must be a power of two >= 8, got {size}")
    return n


class ImageEncoder(nn.Module):
    """Strided conv stack mapping (B, 1, S, S) to a (B, out_dim) feature."""

    def __init__(self, image_size: int, out_dim: int, base_channels: int = 32):
        super().__init__()
        _check_size(image_size, "encoder input")
        layers: list[nn.Module] = []
        c_in, c = 1, base_channels
        size = image_size
        while size > 4:
            layers += [nn.Conv2d(c_in, c, 4, 2, 1), nn.ELU()]
            c_in, c = c, c * 2
            size //= 2
        layers.append(nn.Conv2d(c_in, out_dim, 4, 1, 0))
        self.net = nn.Sequential(*layers)
        self.out_dim = out_dim

    def forward(self, images: Tensor) -> Tensor:
        return self.net(images).flatten(1)


class PatchDecoder(nn.Module):
    """Transposed-conv stack mapping a code (B, in_dim) to (B, S, S) in (0, 1)."""

    def __init__(self, patch_size: int, in_dim: int, base_channels: int = 32):
        super().__init__()
        n_up = _check_size(patch_size, "decoder output") - 2
        c = base_channels * 2 ** (n_up - 1)
        layers: list[nn.Module] = [nn.ConvTranspose2d(in_dim, c, 4, 1, 0), nn.ELU()]
        for k in range(n_up):
            last = k == n_up - 1
            layers.append(nn.ConvTranspose2d(c, 1 if last else c // 2, 4, 2, 1))
            layers.append(nn.Sigmoid() if last else nn.ELU())
            c //= 2
        self.net = nn.Sequential(*layers)
        # Start the canvas mostly empty so component sums begin far from the
        # composition clamp.
        final = self.net[-2]
        nn.init.constant_(final.bias, -2.0)

    def forward(self, code: Tensor) -> Tensor:
        return self.net(code[:, :, None, None]).squeeze(1)


class GaussianHead(nn.Module):
    """Affine layer emitting (mean, log-std); std = exp(log-std) in [1e-4, 10]."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.proj = nn.Linear(in_dim, 2 * out_dim)
        self.out_dim = out_dim

    def forward(self, h: Tensor) -> GaussianParams:
        mean, log_std = self.proj(h).split(self.out_dim, dim=-1)
        std = torch.exp(log_std).clamp(STD_MIN, STD_MAX)
        return GaussianParams(mean, std)
