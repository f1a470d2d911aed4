"""Benchmark dataset generation, serialization, and loading."""

from .balls import (
    BallConfig,
    BallState,
    BallTrajectory,
    CollisionEvent,
    kinetic_energy,
    render_balls,
    resolve_penetration,
    sample_initial_state,
    simulate_bouncing_balls,
    step_physics,
)
from .moving_mnist import (
    DigitTrack,
    MovingMnistConfig,
    compose_tracks,
    load_canonical_mnist_test,
    load_mnist_images,
    sample_moving_mnist,
    write_mnist_idx,
)
from .storage import FixedSet, generate_fixed_set, load_fixed_set, quantize_frames
from .video import VideoDataset, VideoSequence

__all__ = [
    "BallConfig",
    "BallState",
    "BallTrajectory",
    "CollisionEvent",
    "DigitTrack",
    "FixedSet",
    "MovingMnistConfig",
    "VideoDataset",
    "VideoSequence",
    "compose_tracks",
    "generate_fixed_set",
    "kinetic_energy",
    "load_canonical_mnist_test",
    "load_fixed_set",
    "load_mnist_images",
    "quantize_frames",
    "render_balls",
    "resolve_penetration",
    "sample_initial_state",
    "sample_moving_mnist",
    "simulate_bouncing_balls",
    "step_physics",
    "write_mnist_idx",
]
