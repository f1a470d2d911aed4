"""Configuration objects and named dataset profiles.

Everything that parameterizes a run lives here as plain dataclasses that
round-trip through JSON, so configs can be written by hand, checked into a
run directory, and embedded in checkpoints.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field


@dataclass
class DatasetProfile:
    """A named benchmark configuration ("mnist-1", "mnist-2", "mnist-var", "balls-4")."""

    name: str
    kind: str  # "mnist" or "balls"
    frame_size: int
    input_len: int
    pred_len: int
    # mnist only
    n_digits: int = 2
    digit_choices: tuple[int, ...] | None = None  # variable digit count per sequence
    # balls only
    n_balls: int = 4
    # prior mean of the scale coordinate of the initial pose
    initial_scale_prior_mean: float = 2.0

    @property
    def seq_len(self) -> int:
        return self.input_len + self.pred_len


DATASET_PROFILES: dict[str, DatasetProfile] = {
    "mnist-1": DatasetProfile(
        name="mnist-1", kind="mnist", frame_size=64, input_len=10, pred_len=10,
        n_digits=1, initial_scale_prior_mean=2.0,
    ),
    "mnist-2": DatasetProfile(
        name="mnist-2", kind="mnist", frame_size=64, input_len=10, pred_len=10,
        n_digits=2, initial_scale_prior_mean=2.0,
    ),
    "mnist-var": DatasetProfile(
        name="mnist-var", kind="mnist", frame_size=64, input_len=10, pred_len=10,
        n_digits=2, digit_choices=(1, 2, 3), initial_scale_prior_mean=2.0,
    ),
    "balls-4": DatasetProfile(
        name="balls-4", kind="balls", frame_size=128, input_len=10, pred_len=10,
        n_balls=4, initial_scale_prior_mean=4.0,
    ),
}


def get_profile(name: str) -> DatasetProfile:
    try:
        return DATASET_PROFILES[name]
    except KeyError:
        raise KeyError(
            f"unknown dataset profile {name!r}; known profiles: "
            f"{sorted(DATASET_PROFILES)}"
        ) from None


@dataclass
class PriorSpec:
    """Diagonal-Gaussian priors for the three latent groups.

    The second argument of every prior is a standard deviation. Transition
    increments share one prior for both the observed and the predicted
    window.
    """

    beta_mean: float = 0.0
    beta_std: float = 0.1
    content_mean: float = 0.0
    content_std: float = 1.0
    initial_pose_mean: tuple[float, float, float] = (2.0, 0.0, 0.0)
    initial_pose_std: tuple[float, float, float] = (0.2, 1.0, 1.0)

    @classmethod
    def for_profile(cls, profile: DatasetProfile) -> "PriorSpec":
        return cls(initial_pose_mean=(profile.initial_scale_prior_mean, 0.0, 0.0))


@dataclass
class ModelConfig:
    """Architecture hyperparameters.

    The canonical patch is half the frame on each side. All recurrent nets
    are LSTMs with `hidden_size` units; the content code has `content_dim`
    dimensions and the pose is (scale, tx, ty).
    """

    frame_size: int = 64
    n_components: int = 2
    input_len: int = 10
    pred_len: int = 10
    content_dim: int = 128
    pose_dim: int = 3
    hidden_size: int = 64
    feature_dim: int = 128
    base_channels: int = 32
    scale_floor: float = 0.5
    independent_components: bool = False  # severs the cross-component input in prediction

    @property
    def patch_size(self) -> int:
        return self.frame_size // 2

    def validate(self) -> None:
        if self.frame_size not in (16, 32, 64, 128):
            raise ValueError(f"unsupported frame size {self.frame_size}")
        if self.n_components < 1:
            raise ValueError("need at least one component")
        if self.input_len < 1 or self.pred_len < 0:
            raise ValueError("input_len must be >= 1 and pred_len >= 0")


@dataclass
class TrainConfig:
    """Optimization schedule and bookkeeping knobs."""

    profile: str = "mnist-2"
    iterations: int = 15000
    batch_size: int = 32
    lr_initial: float = 1e-3
    lr_final: float = 1e-4
    phase_switch: int | None = None  # defaults to iterations // 2
    kl_weight: float = 1.0
    seed: int = 0
    checkpoint_every: int = 1000
    log_every: int = 1
    train_both_losses_throughout: bool = False  # keep the reconstruction term in phase 2

    def resolved_phase_switch(self) -> int:
        switch = self.iterations // 2 if self.phase_switch is None else self.phase_switch
        if switch > self.iterations:
            raise ValueError("phase_switch must not exceed iterations")
        return switch

    def lr_at(self, iteration: int) -> float:
        # Step decay at the midpoint of training.
        return self.lr_initial if iteration < self.iterations // 2 else self.lr_final


# Paper-scale reference schedule; kept as a named config, not a test target.
PAPER_SCALE = TrainConfig(iterations=200_000, batch_size=32)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def config_digest(cfg) -> str:
    """Stable short digest of any config dataclass (for provenance)."""
    payload = json.dumps(to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def model_config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(**d)


def train_config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    if "phase_switch" in d and d["phase_switch"] is not None:
        d["phase_switch"] = int(d["phase_switch"])
    return TrainConfig(**d)


def load_json_config(path) -> dict:
    with open(path) as f:
        return json.load(f)
