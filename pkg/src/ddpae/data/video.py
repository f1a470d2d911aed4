"""Video sequence containers shared by the dataset generators and loaders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class VideoSequence:
    """Grayscale frames in [0, 1], split into an input window and a prediction window."""

    frames: np.ndarray  # (input_len + pred_len, H, W) float32
    input_len: int
    pred_len: int

    def __post_init__(self):
        if self.frames.ndim != 3:
            raise ValueError(f"frames must be (T+K, H, W), got shape {self.frames.shape}")
        if len(self.frames) != self.input_len + self.pred_len:
            raise ValueError(
                f"{len(self.frames)} frames but input_len={self.input_len} "
                f"pred_len={self.pred_len}"
            )
        if self.input_len < 1 or self.pred_len < 1:
            raise ValueError("need at least one input and one target frame")

    @property
    def inputs(self) -> np.ndarray:
        return self.frames[: self.input_len]

    @property
    def targets(self) -> np.ndarray:
        return self.frames[self.input_len :]


class VideoDataset:
    """A stack of equally shaped sequences with a common input/prediction split."""

    def __init__(self, frames: np.ndarray, input_len: int, pred_len: int):
        if frames.ndim != 4:
            raise ValueError(f"expected (N, T+K, H, W), got shape {frames.shape}")
        if frames.shape[1] != input_len + pred_len:
            raise ValueError(
                f"sequences have {frames.shape[1]} frames, expected "
                f"{input_len + pred_len}"
            )
        self.frames = frames
        self.input_len = input_len
        self.pred_len = pred_len

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, idx: int) -> VideoSequence:
        return VideoSequence(self.frames[idx], self.input_len, self.pred_len)
