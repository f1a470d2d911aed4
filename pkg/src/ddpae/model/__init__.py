"""Model core: latent inference, pose prediction, compositional generation."""

from ..gaussian import GaussianParams
from .ddpae import (
    DDPAE,
    ComponentLatents,
    ModelOutput,
    compose_frame,
    compose_pose_trajectory,
)
from .networks import GaussianHead, ImageEncoder, PatchDecoder
from .stn import bilinear_sample, crop_object, place_object, window_interior_mask

__all__ = [
    "DDPAE",
    "ComponentLatents",
    "GaussianHead",
    "GaussianParams",
    "ImageEncoder",
    "ModelOutput",
    "PatchDecoder",
    "bilinear_sample",
    "compose_frame",
    "compose_pose_trajectory",
    "crop_object",
    "place_object",
    "window_interior_mask",
]
