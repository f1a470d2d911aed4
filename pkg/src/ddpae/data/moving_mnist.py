"""Moving MNIST: digits bouncing in a 64x64 frame with constant speed.

Sequences are generated on the fly from a bank of 28x28 digit images. Each
digit gets a random velocity (speed uniform in [2, 5] px/frame, angle uniform
in [0, 2pi)) and reflects off the frame walls; frames are the pixel-wise sum
of the digit patches clamped to [0, 1].
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .video import VideoDataset, VideoSequence

DIGIT_SIZE = 28
IDX_IMAGE_MAGIC = 2051


@dataclass
class MovingMnistConfig:
    n_digits: int = 2
    frame_size: int = 64
    input_len: int = 10
    pred_len: int = 10
    speed_range: tuple[float, float] = (2.0, 5.0)
    digit_choices: tuple[int, ...] | None = None  # sample digit count per sequence
    mnist_path: str | None = None

    @property
    def seq_len(self) -> int:
        return self.input_len + self.pred_len

    def __post_init__(self):
        if self.n_digits < 1:
            raise ValueError("n_digits must be >= 1")
        if self.frame_size != 64:
            raise ValueError("moving-mnist frames are 64x64")


@dataclass
class DigitTrack:
    """Ground truth for one digit: its image, top-left positions, and velocity."""

    digit_image: np.ndarray  # (28, 28) in [0, 1]
    positions: np.ndarray  # (seq_len, 2) float, (x, y) of the top-left corner
    velocity: np.ndarray  # (2,) px/frame, as sampled before any reflection


def load_mnist_images(path) -> np.ndarray:
    """Read an IDX ubyte image file into an (n, 28, 28) float array in [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(
            f"MNIST image file not found at {path}; expected an IDX ubyte file "
            "(e.g. train-images-idx3-ubyte)"
        )
    raw = path.read_bytes()
    if len(raw) < 16:
        raise ValueError(f"{path} is too short to be an IDX image file")
    magic, count, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"{path}: bad IDX magic {magic}, expected {IDX_IMAGE_MAGIC}")
    if rows != DIGIT_SIZE or cols != DIGIT_SIZE:
        raise ValueError(f"{path}: expected 28x28 images, got {rows}x{cols}")
    data = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if data.size != count * rows * cols:
        raise ValueError(f"{path}: payload size does not match header count {count}")
    return data.reshape(count, rows, cols).astype(np.float32) / 255.0


def write_mnist_idx(path, images: np.ndarray) -> None:
    """Write (n, 28, 28) uint8 images as an IDX ubyte file (test/tooling helper)."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    header = struct.pack(">iiii", IDX_IMAGE_MAGIC, len(images), DIGIT_SIZE, DIGIT_SIZE)
    Path(path).write_bytes(header + images.tobytes())


def _bounce_axis(x: float, v: float, limit: float) -> tuple[float, float]:
    # One step of the 1-D reflection recurrence on [0, limit].
    x = x + v
    while x < 0.0 or x > limit:
        if x < 0.0:
            x, v = -x, -v
        if x > limit:
            x, v = 2.0 * limit - x, -v
    return x, v


def _simulate_track(rng: np.random.Generator, cfg: MovingMnistConfig) -> tuple[np.ndarray, np.ndarray]:
    limit = float(cfg.frame_size - DIGIT_SIZE)
    speed = rng.uniform(*cfg.speed_range)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    vel = np.array([speed * np.cos(angle), speed * np.sin(angle)])
    pos = rng.uniform(0.0, limit, size=2)
    positions = np.empty((cfg.seq_len, 2))
    positions[0] = pos
    vx, vy = vel
    for t in range(1, cfg.seq_len):
        x, vx = _bounce_axis(positions[t - 1, 0], vx, limit)
        y, vy = _bounce_axis(positions[t - 1, 1], vy, limit)
        positions[t] = (x, y)
    return positions, vel


def render_track(track: DigitTrack, frame_size: int) -> np.ndarray:
    """Rasterize one digit track; top-left corners round to the nearest pixel."""
    frames = np.zeros((len(track.positions), frame_size, frame_size), dtype=np.float32)
    for t, (x, y) in enumerate(track.positions):
        xi, yi = int(round(x)), int(round(y))
        frames[t, yi : yi + DIGIT_SIZE, xi : xi + DIGIT_SIZE] = track.digit_image
    return frames


def compose_tracks(tracks: list[DigitTrack], frame_size: int, seq_len: int) -> np.ndarray:
    frames = np.zeros((seq_len, frame_size, frame_size), dtype=np.float32)
    for track in tracks:
        frames += render_track(track, frame_size)
    return np.clip(frames, 0.0, 1.0)


def sample_moving_mnist(
    config: MovingMnistConfig,
    rng: np.random.Generator,
    digit_bank: np.ndarray | None = None,
) -> tuple[VideoSequence, list[DigitTrack]]:
    """Generate one sequence plus the per-digit ground-truth tracks."""
    if digit_bank is None:
        if config.mnist_path is None:
            raise ValueError("either pass digit_bank or set config.mnist_path")
        digit_bank = load_mnist_images(config.mnist_path)
    n_digits = config.n_digits
    if config.digit_choices is not None:
        n_digits = int(rng.choice(config.digit_choices))
    tracks = []
    for _ in range(n_digits):
        digit = digit_bank[rng.integers(len(digit_bank))]
        positions, vel = _simulate_track(rng, config)
        tracks.append(DigitTrack(digit_image=digit, positions=positions, velocity=vel))
    frames = compose_tracks(tracks, config.frame_size, config.seq_len)
    video = VideoSequence(frames, config.input_len, config.pred_len)
    return video, tracks


CANONICAL_LAYOUT = "(20, N, 64, 64) uint8"


def load_canonical_mnist_test(path, input_len: int = 10, pred_len: int = 10) -> VideoDataset:
    """Load the standard fixed test file: NPY, frame-major (20, N, 64, 64) uint8."""
    arr = np.load(path)
    if arr.ndim != 4 or arr.shape[0] != input_len + pred_len or arr.shape[2:] != (64, 64):
        raise ValueError(
            f"{path}: expected layout {CANONICAL_LAYOUT}, got shape {arr.shape}"
        )
    if arr.dtype != np.uint8:
        raise ValueError(
            f"{path}: expected layout {CANONICAL_LAYOUT}, got dtype {arr.dtype}"
        )
    frames = arr.transpose(1, 0, 2, 3).astype(np.float32) / 255.0
    return VideoDataset(frames, input_len, pred_len)
