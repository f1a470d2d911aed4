"""Diagonal-Gaussian parameter container, sampling, and KL divergence."""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor


@dataclass
class GaussianParams:
    """Mean and (positive) standard deviation of a diagonal Gaussian.

    Both tensors have identical shape; the last dimension indexes the
    variable's coordinates and any leading dimensions are batch/time axes.
    """

    mean: Tensor
    std: Tensor

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValueError(
                f"mean/std shape mismatch: {tuple(self.mean.shape)} vs {tuple(self.std.shape)}"
            )

    def detach(self) -> "GaussianParams":
        return GaussianParams(self.mean.detach(), self.std.detach())


def reparameterize(params: GaussianParams, noise: Tensor) -> Tensor:
    """Draw `mean + std * noise`; gradients flow into both parameters."""
    if noise.shape != params.mean.shape:
        raise ValueError(
            f"noise shape {tuple(noise.shape)} does not match parameter shape "
            f"{tuple(params.mean.shape)}"
        )
    return params.mean + params.std * noise


def gaussian_kl(q: GaussianParams, p: GaussianParams) -> Tensor:
    """Closed-form KL(q || p) between diagonal Gaussians, summed over the last axis.

    Returns a tensor shaped like the leading (batch) axes; zero when q == p.
    """
    if q.mean.shape != p.mean.shape:
        raise ValueError(
            f"KL shape mismatch: q {tuple(q.mean.shape)} vs p {tuple(p.mean.shape)}"
        )
    var_ratio = (q.std / p.std) ** 2
    mean_term = ((q.mean - p.mean) / p.std) ** 2
    return 0.5 * (var_ratio + mean_term - 1.0 - torch.log(var_ratio)).sum(dim=-1)
