"""Objective construction, optimization loop, and gradient verification."""

from .gradcheck import GradCheckReport, central_difference_errors, grad_check, sampler_grad_check
from .loop import (
    BallsSource,
    FixedSetSource,
    MovingMnistSource,
    TrainingDiverged,
    TrainResult,
    build_model,
    metrics_line,
    strip_volatile,
    train,
)
from .losses import (
    LossBreakdown,
    elbo_loss,
    gaussian_kl,
    reconstruction_nll,
    reparameterize,
)

__all__ = [
    "BallsSource",
    "FixedSetSource",
    "GradCheckReport",
    "LossBreakdown",
    "MovingMnistSource",
    "TrainResult",
    "TrainingDiverged",
    "build_model",
    "central_difference_errors",
    "elbo_loss",
    "gaussian_kl",
    "grad_check",
    "metrics_line",
    "reconstruction_nll",
    "reparameterize",
    "sampler_grad_check",
    "strip_volatile",
    "train",
]
