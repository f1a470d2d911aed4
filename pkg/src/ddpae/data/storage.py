"""Fixed dataset files: 8-bit frames behind a 64-byte header, plus sidecars.

Main file layout (little-endian):

    bytes 0..7    magic  b"DDPAEFX1"
    bytes 8..39   u32 fields: version, n_sequences, seq_len, height, width,
                  input_len, pred_len, flags (bit 0: trajectory sidecars)
    bytes 40..63  reserved, zero
    bytes 64..    frames as uint8, C-order (n_sequences, seq_len, H, W)

Sidecars next to the main file: `<name>.json` (config + seed manifest),
`<name>.positions.npy` / `<name>.velocities.npy` (float32 ground-truth
trajectories). All outputs are byte-deterministic given (config, seed).
"""
from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .balls import BallConfig, simulate_bouncing_balls
from .moving_mnist import MovingMnistConfig, load_mnist_images, sample_moving_mnist
from .video import VideoDataset

MAGIC = b"DDPAEFX1"
HEADER_SIZE = 64
VERSION = 1
_HEADER_FIELDS = struct.Struct("<8s7I")


def _pack_header(n: int, seq_len: int, h: int, w: int, input_len: int, pred_len: int, flags: int) -> bytes:
    head = _HEADER_FIELDS.pack(MAGIC, VERSION, n, seq_len, h, w, input_len, pred_len)
    # flags live in the first reserved word
    return head + struct.pack("<I", flags) + b"\x00" * (HEADER_SIZE - len(head) - 4)


def _unpack_header(raw: bytes) -> dict:
    if len(raw) < HEADER_SIZE:
        raise ValueError("file too short for a fixed-set header")
    magic, version, n, seq_len, h, w, input_len, pred_len = _HEADER_FIELDS.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}; not a fixed-set file")
    if version != VERSION:
        raise ValueError(f"unsupported fixed-set version {version}")
    (flags,) = struct.unpack_from("<I", raw, _HEADER_FIELDS.size)
    return {
        "n_sequences": n, "seq_len": seq_len, "height": h, "width": w,
        "input_len": input_len, "pred_len": pred_len, "flags": flags,
    }


def quantize_frames(frames: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(frames, 0.0, 1.0) * 255.0).astype(np.uint8)


@dataclass
class FixedSet:
    frames_u8: np.ndarray  # (n, seq_len, H, W) uint8
    input_len: int
    pred_len: int
    manifest: dict
    positions: np.ndarray | None = None  # (n, seq_len, n_objects, 2) float32
    velocities: np.ndarray | None = None

    def as_dataset(self) -> VideoDataset:
        frames = self.frames_u8.astype(np.float32) / 255.0
        return VideoDataset(frames, self.input_len, self.pred_len)


def generate_fixed_set(
    config: MovingMnistConfig | BallConfig,
    n_sequences: int,
    seed: int,
    path,
    digit_bank: np.ndarray | None = None,
) -> Path:
    """Generate and write a fixed set; deterministic given (config, seed)."""
    path = Path(path)
    rng = np.random.default_rng(seed)
    frames = np.empty(
        (n_sequences, config.seq_len, config.frame_size, config.frame_size),
        dtype=np.uint8,
    )
    if isinstance(config, MovingMnistConfig):
        kind = "mnist"
        if digit_bank is None:
            if config.mnist_path is None:
                raise ValueError("moving-mnist generation needs digit_bank or config.mnist_path")
            digit_bank = load_mnist_images(config.mnist_path)
        has_fixed_count = config.digit_choices is None
        positions = (
            np.zeros((n_sequences, config.seq_len, config.n_digits, 2), dtype=np.float32)
            if has_fixed_count else None
        )
        velocities = (
            np.zeros((n_sequences, config.n_digits, 2), dtype=np.float32)
            if has_fixed_count else None
        )
        for i in range(n_sequences):
            video, tracks = sample_moving_mnist(config, rng, digit_bank)
            frames[i] = quantize_frames(video.frames)
            if has_fixed_count:
                for d, track in enumerate(tracks):
                    positions[i, :, d] = track.positions
                    velocities[i, d] = track.velocity
    elif isinstance(config, BallConfig):
        kind = "balls"
        positions = np.zeros((n_sequences, config.seq_len, config.n_balls, 2), dtype=np.float32)
        velocities = np.zeros((n_sequences, config.seq_len, config.n_balls, 2), dtype=np.float32)
        for i in range(n_sequences):
            traj = simulate_bouncing_balls(config, rng)
            frames[i] = quantize_frames(traj.rendered.frames)
            positions[i] = traj.positions_array()
            velocities[i] = traj.velocities_array()
    else:
        raise TypeError(f"unsupported config type {type(config).__name__}")

    has_traj = positions is not None
    header = _pack_header(
        n_sequences, config.seq_len, config.frame_size, config.frame_size,
        config.input_len, config.pred_len, int(has_traj),
    )
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(frames.tobytes())
    except OSError as e:
        raise OSError(f"failed to write fixed set to {path}: {e}") from e
    if has_traj:
        np.save(_sidecar(path, "positions"), positions)
        np.save(_sidecar(path, "velocities"), velocities)
    manifest = {
        "format": "ddpae-fixed-set",
        "version": VERSION,
        "kind": kind,
        "config": dataclasses.asdict(config),
        "seed": seed,
        "n_sequences": n_sequences,
        "has_trajectories": has_traj,
    }
    Path(str(path) + ".json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _sidecar(path: Path, name: str) -> Path:
    return Path(str(path) + f".{name}.npy")


def load_fixed_set(path) -> FixedSet:
    path = Path(path)
    raw = path.read_bytes()
    info = _unpack_header(raw)
    n, L = info["n_sequences"], info["seq_len"]
    h, w = info["height"], info["width"]
    expected = HEADER_SIZE + n * L * h * w
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    frames = np.frombuffer(raw, dtype=np.uint8, offset=HEADER_SIZE).reshape(n, L, h, w)
    manifest_path = Path(str(path) + ".json")
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    positions = velocities = None
    if info["flags"] & 1:
        positions = np.load(_sidecar(path, "positions"))
        velocities = np.load(_sidecar(path, "velocities"))
    return FixedSet(
        frames_u8=frames, input_len=info["input_len"], pred_len=info["pred_len"],
        manifest=manifest, positions=positions, velocities=velocities,
    )
