"""Objective: pixel BCE terms plus KL regularizers for every latent group."""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor

from ..config import PriorSpec
from ..gaussian import GaussianParams, gaussian_kl, reparameterize  # noqa: F401  (re-exported)
from ..model.ddpae import ModelOutput

PRED_EPS = 1e-7
PHASES = ("both", "prediction-only")


def reconstruction_nll(predicted: Tensor, target: Tensor) -> Tensor:
    """Bernoulli NLL with real-valued targets.

    Summed over pixels and frames, averaged over the batch (dim 0).
    Predictions are clamped away from {0, 1} before the logs.
    """
    if predicted.shape != target.shape:
        raise ValueError(
            f"prediction shape {tuple(predicted.shape)} does not match target "
            f"shape {tuple(target.shape)}"
        )
    p = predicted.clamp(PRED_EPS, 1.0 - PRED_EPS)
    bce = -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p))
    return bce.reshape(bce.shape[0], -1).sum(dim=1).mean()


def _const_prior(like: GaussianParams, mean, std) -> GaussianParams:
    mean_t = torch.as_tensor(mean, dtype=like.mean.dtype, device=like.mean.device)
    std_t = torch.as_tensor(std, dtype=like.std.dtype, device=like.std.device)
    return GaussianParams(
        mean_t.expand_as(like.mean), std_t.expand_as(like.std)
    )


@dataclass
class LossBreakdown:
    total: Tensor
    nll_prediction: Tensor
    nll_reconstruction: Tensor
    kl_content: Tensor
    kl_initial_pose: Tensor
    kl_transitions: Tensor

    def as_dict(self) -> dict[str, float]:
        return {
            "total": float(self.total),
            "nll_prediction": float(self.nll_prediction),
            "nll_reconstruction": float(self.nll_reconstruction),
            "kl_content": float(self.kl_content),
            "kl_initial_pose": float(self.kl_initial_pose),
            "kl_transitions": float(self.kl_transitions),
        }


def elbo_loss(
    output: ModelOutput,
    inputs: Tensor,
    targets: Tensor,
    priors: PriorSpec,
    phase: str = "both",
    kl_weight: float = 1.0,
) -> LossBreakdown:
    """Negative ELBO with a per-term breakdown.

    `phase` selects whether the input-window reconstruction error joins the
    total; the prediction error and all KL terms are always on. Transition
    increments over both the observed and predicted windows share the same
    prior. Every term is averaged over the batch.
    """
    if phase not in PHASES:
        raise ValueError(f"phase must be one of {PHASES}, got {phase!r}")
    nll_pred = reconstruction_nll(output.prediction, targets)
    nll_recon = reconstruction_nll(output.reconstruction, inputs)

    zero = nll_pred.new_zeros(())
    kl_content, kl_initial, kl_trans = zero, zero.clone(), zero.clone()
    for lat in output.latents:
        if lat.content is not None:
            prior = _const_prior(lat.content, priors.content_mean, priors.content_std)
            kl_content = kl_content + gaussian_kl(lat.content, prior).mean()
        prior = _const_prior(
            lat.initial_pose, priors.initial_pose_mean, priors.initial_pose_std
        )
        kl_initial = kl_initial + gaussian_kl(lat.initial_pose, prior).mean()
        prior = _const_prior(lat.transitions, priors.beta_mean, priors.beta_std)
        kl_trans = kl_trans + gaussian_kl(lat.transitions, prior).sum(dim=-1).mean()

    total = nll_pred + kl_weight * (kl_content + kl_initial + kl_trans)
    if phase == "both":
        total = total + nll_recon
    return LossBreakdown(
        total=total,
        nll_prediction=nll_pred,
        nll_reconstruction=nll_recon,
        kl_content=kl_content,
        kl_initial_pose=kl_initial,
        kl_transitions=kl_trans,
    )
