"""Frame-level and velocity metrics.

BCE follows the usual protocol for this benchmark: per sequence, binary
cross-entropy against real-valued targets summed over every pixel of every
predicted frame, then averaged over sequences. MSE sums squared error over
the pixels of each frame, averages over frames, then over sequences (one of
several conventions in circulation; reports carry it in their header).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PRED_EPS = 1e-7
ZERO_SPEED = 1e-6


def _check_pair(predictions: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(
            f"prediction shape {predictions.shape} does not match target shape "
            f"{targets.shape}"
        )
    if predictions.ndim != 4:
        raise ValueError("expected (n_sequences, frames, H, W) arrays")
    return predictions, targets


def eval_bce(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Per-sequence pixel BCE summed over predicted frames, averaged over sequences."""
    predictions, targets = _check_pair(predictions, targets)
    p = np.clip(predictions, PRED_EPS, 1.0 - PRED_EPS)
    bce = -(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p))
    return float(bce.reshape(len(bce), -1).sum(axis=1).mean())


def eval_mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Squared error summed per frame, averaged over frames, then sequences."""
    predictions, targets = _check_pair(predictions, targets)
    per_frame = ((predictions - targets) ** 2).sum(axis=(2, 3))
    return float(per_frame.mean(axis=1).mean())


def copy_last_frame_baseline(inputs: np.ndarray, pred_len: int) -> np.ndarray:
    """Trivial predictor: repeat the last input frame."""
    return np.repeat(inputs[:, -1:], pred_len, axis=1)


def extract_positions(poses: np.ndarray) -> np.ndarray:
    """Attention-window centers in [0, 1] frame coordinates.

    poses: (..., 3) latent (s, tx, ty) with translations in [-1, 1].
    Returns (..., 2) positions ((tx + 1) / 2, (ty + 1) / 2).
    """
    poses = np.asarray(poses, dtype=np.float64)
    return (poses[..., 1:3] + 1.0) / 2.0


def velocity(track: np.ndarray, t: int) -> np.ndarray:
    """Central-difference velocity p_{t+1} - p_{t-1} of one position track."""
    track = np.asarray(track, dtype=np.float64)
    if t - 1 < 0 or t + 1 >= len(track):
        raise IndexError(
            f"velocity at t={t} needs neighbors on both sides in a track of "
            f"length {len(track)}"
        )
    return track[t + 1] - track[t - 1]


@dataclass
class VelocityMetrics:
    """Per-timestep velocity accuracy, averaged over matched objects."""

    timesteps: list[int]
    magnitude_error: np.ndarray  # (n_steps,) mean relative speed error
    cosine_similarity: np.ndarray  # (n_steps,) mean direction agreement
    n_averaged: np.ndarray  # (n_steps,) instances entering each mean
    n_skipped: np.ndarray  # (n_steps,) instances skipped for near-zero gt speed

    def mean_magnitude_error(self) -> float:
        return float(self.magnitude_error.mean())

    def mean_cosine(self) -> float:
        return float(self.cosine_similarity.mean())


def velocity_metrics(
    predicted_tracks: np.ndarray,
    gt_tracks: np.ndarray,
    assignment: np.ndarray,
    timesteps: list[int] | None = None,
) -> VelocityMetrics:
    """Relative speed error and cosine similarity of matched velocities.

    predicted_tracks: (N, L, 2); gt_tracks: (M, L, 2); assignment maps
    predicted index -> gt index. Timesteps default to every index where the
    central difference exists. Ground-truth velocities below ZERO_SPEED are
    skipped and counted separately.
    """
    predicted_tracks = np.asarray(predicted_tracks, dtype=np.float64)
    gt_tracks = np.asarray(gt_tracks, dtype=np.float64)
    matched_gt = gt_tracks[np.asarray(assignment)]
    L = predicted_tracks.shape[1]
    if timesteps is None:
        timesteps = list(range(1, L - 1))
    mag = np.zeros(len(timesteps))
    cos = np.zeros(len(timesteps))
    n_avg = np.zeros(len(timesteps), dtype=int)
    n_skip = np.zeros(len(timesteps), dtype=int)
    for k, t in enumerate(timesteps):
        v_hat = predicted_tracks[:, t + 1] - predicted_tracks[:, t - 1]
        v = matched_gt[:, t + 1] - matched_gt[:, t - 1]
        speed_hat = np.linalg.norm(v_hat, axis=1)
        speed = np.linalg.norm(v, axis=1)
        keep = speed >= ZERO_SPEED
        n_skip[k] = int((~keep).sum())
        n_avg[k] = int(keep.sum())
        if n_avg[k]:
            mag[k] = float(
                (np.abs(speed_hat[keep] - speed[keep]) / speed[keep]).mean()
            )
            denom = np.maximum(speed_hat[keep] * speed[keep], 1e-12)
            cos[k] = float(
                ((v_hat[keep] * v[keep]).sum(axis=1) / denom).mean()
            )
    return VelocityMetrics(
        timesteps=list(timesteps),
        magnitude_error=mag,
        cosine_similarity=cos,
        n_averaged=n_avg,
        n_skipped=n_skip,
    )


def merge_velocity_metrics(parts: list[VelocityMetrics]) -> VelocityMetrics:
    """Combine per-instance metrics into test-set averages (count-weighted)."""
    if not parts:
        raise ValueError("no velocity metrics to merge")
    timesteps = parts[0].timesteps
    for p in parts:
        if p.timesteps != timesteps:
            raise ValueError("velocity metrics cover different timesteps")
    n_avg = np.sum([p.n_averaged for p in parts], axis=0)
    n_skip = np.sum([p.n_skipped for p in parts], axis=0)
    weights = np.maximum(n_avg, 1)
    mag = np.sum([p.magnitude_error * p.n_averaged for p in parts], axis=0) / weights
    cos = np.sum([p.cosine_similarity * p.n_averaged for p in parts], axis=0) / weights
    return VelocityMetrics(
        timesteps=timesteps,
        magnitude_error=mag,
        cosine_similarity=cos,
        n_averaged=n_avg,
        n_skipped=n_skip,
    )
