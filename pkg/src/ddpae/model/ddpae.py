"""The decompose-and-disentangle video prediction model.

A frame sequence is explained by N components. Each component carries a
time-invariant content code (decoded once into a canonical patch) and a
3-dim pose trajectory (scale, x, y) that places the patch in every frame.
Poses are parameterized by an initial pose plus per-step transition
increments; future increments are predicted by a seq2seq recurrence whose
decoder cells can read the previous component's hidden state at the same
step, which lets components interact.

Inference runs a 2-D recurrence: a temporal LSTM over the frames of each
component, chained through a component-level LSTM so that component i sees
a summary of components < i. All outputs for component i are therefore
independent of components j > i.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch import Tensor

from ..config import ModelConfig
from ..gaussian import GaussianParams, reparameterize
from .networks import GaussianHead, ImageEncoder, PatchDecoder
from .stn import crop_object, place_object

SAMPLING_MODES = ("stochastic", "deterministic")
_SCALE_SHARPNESS = 5.0  # softplus sharpness; near-identity one unit above the floor


@dataclass
class ComponentLatents:
    """Posterior parameters and samples for one component's random variables."""

    initial_pose: GaussianParams  # (B, 3)
    initial_pose_sample: Tensor
    transitions: GaussianParams  # (B, T, 3), extended to T+K after prediction
    transition_samples: Tensor
    content: GaussianParams | None = None  # (B, content_dim)
    content_sample: Tensor | None = None


@dataclass
class ModelOutput:
    reconstruction: Tensor  # (B, T, H, W)
    prediction: Tensor  # (B, K, H, W)
    latents: list[ComponentLatents]
    poses: Tensor  # (B, N, T+K, 3), latent-space pose trajectories
    component_frames: Tensor | None = None  # (B, N, T+K, H, W)


def compose_pose_trajectory(initial_pose: Tensor, transitions: Tensor) -> Tensor:
    """Accumulate pose increments: pose_t = pose_{t-1} + beta_t.

    initial_pose: (..., 3); transitions: (..., T, 3). Returns (..., T, 3)
    holding poses for steps 1..T (the initial pose itself is step 0).
    """
    return initial_pose.unsqueeze(-2) + transitions.cumsum(dim=-2)


def compose_frame(component_frames: Tensor | list[Tensor]) -> Tensor:
    """Pixel-wise sum of component frames, clamped to [0, 1]."""
    if isinstance(component_frames, (list, tuple)):
        component_frames = torch.stack(list(component_frames))
        total = component_frames.sum(dim=0)
    else:
        total = component_frames.sum(dim=1)
    return total.clamp(0.0, 1.0)


class DDPAE(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        hid = config.hidden_size
        feat = config.feature_dim
        pose = config.pose_dim

        self.frame_encoder = ImageEncoder(config.frame_size, feat, config.base_channels)
        self.temporal_lstm = nn.LSTM(feat, hid, batch_first=True)
        self.component_cell = nn.LSTMCell(hid, hid)
        self.initial_pose_head = GaussianHead(hid, pose)
        self.transition_head = GaussianHead(hid, pose)

        self.patch_encoder = ImageEncoder(config.patch_size, feat, config.base_channels)
        self.content_pool = nn.LSTM(feat, hid, batch_first=True)
        self.content_head = GaussianHead(hid, config.content_dim)

        self.prediction_encoder = nn.LSTM(pose, hid, batch_first=True)
        self.prediction_cell = nn.LSTMCell(pose + hid, hid)
        self.prediction_head = GaussianHead(hid, pose)

        self.patch_decoder = PatchDecoder(config.patch_size, config.content_dim, config.base_channels)

    # ------------------------------------------------------------------
    # sampling helpers
    # ------------------------------------------------------------------

    def _sample(self, params: GaussianParams, mode: str, generator) -> Tensor:
        if mode == "deterministic":
            return params.mean
        noise = torch.randn(
            params.mean.shape, generator=generator,
            dtype=params.mean.dtype, device=params.mean.device,
        )
        return reparameterize(params, noise)

    def to_render_pose(self, pose: Tensor) -> Tensor:
        """Map a latent pose to the (s, tx, ty) used by the attention window.

        The scale passes through a softplus with floor `scale_floor`, so any
        real-valued latent yields a valid window; translations pass through.
        """
        floor = self.config.scale_floor
        s = floor + F.softplus(pose[..., 0] - floor, beta=_SCALE_SHARPNESS)
        return torch.cat([s.unsqueeze(-1), pose[..., 1:]], dim=-1)

    # ------------------------------------------------------------------
    # pipeline stages
    # ------------------------------------------------------------------

    def encode_frames(self, frames: Tensor) -> Tensor:
        """Per-frame features: (B, T, H, W) -> (B, T, feature_dim)."""
        B, T, H, W = frames.shape
        feats = self.frame_encoder(frames.reshape(B * T, 1, H, W))
        return feats.reshape(B, T, -1)

    def infer_latents(
        self,
        frames: Tensor,
        n_components: int | None = None,
        mode: str = "stochastic",
        generator=None,
    ) -> list[ComponentLatents]:
        """Posterior parameters for each component's initial pose and transitions.

        Component i's temporal recurrence starts from the component-level
        state left by component i-1, making the chain causal in i.
        """
        self._check_mode(mode)
        N = self.config.n_components if n_components is None else n_components
        B = frames.shape[0]
        feats = self.encode_frames(frames)
        hid = self.config.hidden_size
        comp_h = feats.new_zeros(B, hid)
        comp_c = feats.new_zeros(B, hid)
        latents = []
        for _ in range(N):
            out, _ = self.temporal_lstm(feats, (comp_h[None], comp_c[None]))
            comp_h, comp_c = self.component_cell(out[:, -1], (comp_h, comp_c))
            initial_pose = self.initial_pose_head(comp_h)
            transitions = self.transition_head(out)
            latents.append(
                ComponentLatents(
                    initial_pose=initial_pose,
                    initial_pose_sample=self._sample(initial_pose, mode, generator),
                    transitions=transitions,
                    transition_samples=self._sample(transitions, mode, generator),
                )
            )
        return latents

    def encode_content(
        self,
        frames: Tensor,
        poses: Tensor,
        mode: str = "stochastic",
        generator=None,
    ) -> tuple[GaussianParams, Tensor]:
        """One shared content code per component from the cropped patches.

        frames: (B, T, H, W); poses: (B, T, 3) latent poses for one
        component. Crops follow the poses, a shared patch encoder embeds
        each crop, and a pooling LSTM reduces the sequence to one code.
        """
        self._check_mode(mode)
        B, T, H, W = frames.shape
        render = self.to_render_pose(poses).reshape(B * T, 3)
        patches = crop_object(frames.reshape(B * T, H, W), render, self.config.patch_size)
        feats = self.patch_encoder(patches.unsqueeze(1)).reshape(B, T, -1)
        out, _ = self.content_pool(feats)
        params = self.content_head(out[:, -1])
        return params, self._sample(params, mode, generator)

    def predict_transitions(
        self,
        latents: list[ComponentLatents],
        poses: list[Tensor],
        pred_len: int,
        mode: str = "stochastic",
        generator=None,
    ) -> tuple[list[GaussianParams], list[Tensor], list[Tensor]]:
        """Roll out pred_len future transition increments per component.

        An encoder LSTM summarizes each component's observed transitions;
        decoder cells then step jointly across components so that component
        i can read component i-1's fresh hidden state (unless the model
        runs with independent components). Returns per-component predicted
        transition params, samples, and future poses.
        """
        self._check_mode(mode)
        N = len(latents)
        B = latents[0].transition_samples.shape[0]
        hid = self.config.hidden_size
        pose_dim = self.config.pose_dim
        device = latents[0].transition_samples.device
        dtype = latents[0].transition_samples.dtype

        states = []
        for lat in latents:
            _, (h, c) = self.prediction_encoder(lat.transition_samples)
            states.append((h[0], c[0]))
        last_pose = [p[:, -1] for p in poses]

        step_params: list[list[GaussianParams]] = [[] for _ in range(N)]
        step_samples: list[list[Tensor]] = [[] for _ in range(N)]
        future_poses: list[list[Tensor]] = [[] for _ in range(N)]
        for _ in range(pred_len):
            prev_hidden = None
            for i in range(N):
                if prev_hidden is None or self.config.independent_components:
                    cross = torch.zeros(B, hid, device=device, dtype=dtype)
                else:
                    cross = prev_hidden
                h, c = self.prediction_cell(
                    torch.cat([last_pose[i], cross], dim=-1), states[i]
                )
                states[i] = (h, c)
                prev_hidden = h
                params = self.prediction_head(h)
                sample = self._sample(params, mode, generator)
                step_params[i].append(params)
                step_samples[i].append(sample)
                last_pose[i] = last_pose[i] + sample
                future_poses[i].append(last_pose[i])

        def stack_params(plist: list[GaussianParams]) -> GaussianParams:
            if not plist:
                empty = torch.zeros(B, 0, pose_dim, device=device, dtype=dtype)
                return GaussianParams(empty, empty.clone())
            return GaussianParams(
                torch.stack([p.mean for p in plist], dim=1),
                torch.stack([p.std for p in plist], dim=1),
            )

        def stack_tensors(tlist: list[Tensor]) -> Tensor:
            if not tlist:
                return torch.zeros(B, 0, pose_dim, device=device, dtype=dtype)
            return torch.stack(tlist, dim=1)

        return (
            [stack_params(p) for p in step_params],
            [stack_tensors(s) for s in step_samples],
            [stack_tensors(p) for p in future_poses],
        )

    def decode_content(self, content_sample: Tensor) -> Tensor:
        """Decode a content code into a canonical patch (B, C, C) in (0, 1)."""
        return self.patch_decoder(content_sample)

    # ------------------------------------------------------------------
    # full pipeline
    # ------------------------------------------------------------------

    def forward(
        self,
        frames: Tensor,
        pred_len: int | None = None,
        mode: str = "stochastic",
        generator=None,
        keep_components: bool = False,
    ) -> ModelOutput:
        """Reconstruct the input window and predict `pred_len` future frames."""
        self._check_mode(mode)
        K = self.config.pred_len if pred_len is None else pred_len
        B, T, H, W = frames.shape
        N = self.config.n_components

        latents = self.infer_latents(frames, mode=mode, generator=generator)
        poses_in = [
            compose_pose_trajectory(l.initial_pose_sample, l.transition_samples)
            for l in latents
        ]
        for lat, poses in zip(latents, poses_in):
            lat.content, lat.content_sample = self.encode_content(
                frames, poses, mode=mode, generator=generator
            )
        pred_params, pred_samples, poses_out = self.predict_transitions(
            latents, poses_in, K, mode=mode, generator=generator
        )
        for lat, params, samples in zip(latents, pred_params, pred_samples):
            lat.transitions = GaussianParams(
                torch.cat([lat.transitions.mean, params.mean], dim=1),
                torch.cat([lat.transitions.std, params.std], dim=1),
            )
            lat.transition_samples = torch.cat(
                [lat.transition_samples, samples], dim=1
            )

        all_poses = torch.stack(
            [torch.cat([pin, pout], dim=1) for pin, pout in zip(poses_in, poses_out)],
            dim=1,
        )  # (B, N, T+K, 3)

        frames_per_component = []
        for i, lat in enumerate(latents):
            patch = self.decode_content(lat.content_sample)  # (B, C, C)
            poses = all_poses[:, i].reshape(B * (T + K), 3)
            tiled = patch.unsqueeze(1).expand(B, T + K, *patch.shape[1:])
            placed = place_object(
                tiled.reshape(B * (T + K), *patch.shape[1:]),
                self.to_render_pose(poses),
                self.config.frame_size,
            )
            frames_per_component.append(placed.reshape(B, T + K, H, W))

        stacked = torch.stack(frames_per_component, dim=1)  # (B, N, T+K, H, W)
        composed = compose_frame(stacked)
        return ModelOutput(
            reconstruction=composed[:, :T],
            prediction=composed[:, T : T + K],
            latents=latents,
            poses=all_poses,
            component_frames=stacked if keep_components else None,
        )

    @staticmethod
    def _check_mode(mode: str) -> None:
        if mode not in SAMPLING_MODES:
            raise ValueError(f"mode must be one of {SAMPLING_MODES}, got {mode!r}")

    def parameter_manifest(self) -> dict[str, tuple[int, ...]]:
        """Stable name -> shape map of every trainable array."""
        return {name: tuple(p.shape) for name, p in self.named_parameters()}
