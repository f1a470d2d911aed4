"""Differentiable attention windows: bilinear crop and its inverse placement.

Conventions, shared by both directions:

* Frame and patch coordinates are normalized to [-1, 1] with pixel 0 at -1
  and pixel S-1 at +1 (align-corners).
* A pose (s, tx, ty) defines a window of half-width 1/s centered at
  (tx, ty) in frame coordinates. `crop` reads the window into a canonical
  patch; `place` writes a canonical patch back into an empty frame.
* Samples outside the source grid are zero (zero padding).

Both operations are bilinear resamplers, differentiable in the source
image and in the pose.
"""
from __future__ import annotations

import torch
from torch import Tensor


def bilinear_sample(images: Tensor, x: Tensor, y: Tensor) -> Tensor:
    """Sample `images` (B, H, W) at normalized coordinates x, y (B, h, w).

    Returns (B, h, w). Out-of-grid samples contribute zero; gradients flow
    to the images (through the gathered values) and to the coordinates
    (through the interpolation weights).
    """
    B, H, W = images.shape
    px = (x + 1.0) * 0.5 * (W - 1)
    py = (y + 1.0) * 0.5 * (H - 1)
    x0 = torch.floor(px)
    y0 = torch.floor(py)
    wx = px - x0
    wy = py - y0
    x0 = x0.long()
    y0 = y0.long()

    flat = images.reshape(B, H * W)

    def fetch(ix: Tensor, iy: Tensor) -> Tensor:
        valid = (ix >= 0) & (ix < W) & (iy >= 0) & (iy < H)
        idx = (iy.clamp(0, H - 1) * W + ix.clamp(0, W - 1)).reshape(B, -1)
        vals = torch.gather(flat, 1, idx).reshape(ix.shape)
        return vals * valid.to(images.dtype)

    tl = fetch(x0, y0)
    tr = fetch(x0 + 1, y0)
    bl = fetch(x0, y0 + 1)
    br = fetch(x0 + 1, y0 + 1)
    top = (1.0 - wx) * tl + wx * tr
    bottom = (1.0 - wx) * bl + wx * br
    return (1.0 - wy) * top + wy * bottom


def _grid(size: int, device, dtype) -> tuple[Tensor, Tensor]:
    lin = torch.linspace(-1.0, 1.0, size, device=device, dtype=dtype)
    gy, gx = torch.meshgrid(lin, lin, indexing="ij")
    return gx, gy


def crop_object(frames: Tensor, poses: Tensor, patch_size: int) -> Tensor:
    """Extract the attention window of each frame into a canonical patch.

    frames: (B, H, W); poses: (B, 3) as (s, tx, ty), s > 0. For canonical
    coordinate u the sample point is u / s + t.
    """
    B = frames.shape[0]
    gx, gy = _grid(patch_size, frames.device, frames.dtype)
    s = poses[:, 0].view(B, 1, 1)
    tx = poses[:, 1].view(B, 1, 1)
    ty = poses[:, 2].view(B, 1, 1)
    return bilinear_sample(frames, gx / s + tx, gy / s + ty)


def place_object(patches: Tensor, poses: Tensor, frame_size: int) -> Tensor:
    """Warp canonical patches into empty frames (inverse of `crop_object`).

    patches: (B, C, C); poses: (B, 3). For frame coordinate v the sample
    point is s * (v - t); everything outside the window stays zero.
    """
    B = patches.shape[0]
    gx, gy = _grid(frame_size, patches.device, patches.dtype)
    s = poses[:, 0].view(B, 1, 1)
    tx = poses[:, 1].view(B, 1, 1)
    ty = poses[:, 2].view(B, 1, 1)
    return bilinear_sample(patches, s * (gx - tx), s * (gy - ty))


def window_interior_mask(pose, frame_size: int, margin_px: float = 1.0):
    """Boolean (H, W) mask of frame pixels strictly inside the pose window."""
    s, tx, ty = float(pose[0]), float(pose[1]), float(pose[2])
    margin = margin_px * 2.0 / (frame_size - 1)
    half = 1.0 / s - margin
    lin = torch.linspace(-1.0, 1.0, frame_size)
    gy, gx = torch.meshgrid(lin, lin, indexing="ij")
    return (gx - tx).abs().le(half) & (gy - ty).abs().le(half)
