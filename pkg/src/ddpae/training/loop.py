"""Training loop: Adam with a midpoint LR drop, two-phase loss, checkpoints.

The loop owns three RNG streams (weight init happens at model construction,
noise sampling through a torch.Generator, data through a numpy Generator);
all of them are captured in every checkpoint so a resumed run replays the
interrupted one exactly.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .. import checkpoint as ckpt
from ..config import ModelConfig, PriorSpec, TrainConfig, to_dict
from ..data.balls import BallConfig, simulate_bouncing_balls
from ..data.moving_mnist import MovingMnistConfig, sample_moving_mnist
from ..data.storage import FixedSet
from ..model.ddpae import DDPAE
from .losses import elbo_loss


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, last_checkpoint: Path | None):
        super().__init__(
            f"non-finite loss at iteration {iteration}; "
            f"last good checkpoint: {last_checkpoint}"
        )
        self.iteration = iteration
        self.last_checkpoint = last_checkpoint


# ----------------------------------------------------------------------
# batch sources
# ----------------------------------------------------------------------

class MovingMnistSource:
    """On-the-fly sequence batches from a bank of digit images."""

    def __init__(self, config: MovingMnistConfig, digit_bank: np.ndarray):
        self.config = config
        self.digit_bank = digit_bank

    def next_batch(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        seqs = [
            sample_moving_mnist(self.config, rng, self.digit_bank)[0].frames
            for _ in range(batch_size)
        ]
        return np.stack(seqs)


class BallsSource:
    """On-the-fly simulated ball sequences."""

    def __init__(self, config: BallConfig):
        self.config = config

    def next_batch(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        seqs = [
            simulate_bouncing_balls(self.config, rng).rendered.frames
            for _ in range(batch_size)
        ]
        return np.stack(seqs)


class FixedSetSource:
    """Batches drawn with replacement from a fixed dataset file."""

    def __init__(self, fixed: FixedSet):
        self.fixed = fixed

    def next_batch(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(len(self.fixed.frames_u8), size=batch_size)
        return self.fixed.frames_u8[idx].astype(np.float32) / 255.0


# ----------------------------------------------------------------------
# the loop
# ----------------------------------------------------------------------

@dataclass
class TrainResult:
    final_checkpoint: Path
    metrics_path: Path
    iterations_run: int


def build_model(model_config: ModelConfig, seed: int) -> DDPAE:
    """Construct a model with seeded weight initialization."""
    torch.manual_seed(seed)
    return DDPAE(model_config)


def metrics_line(iteration: int, losses: dict[str, float], lr: float, phase: str) -> str:
    record = {"iteration": iteration}
    record.update(losses)
    record["lr"] = lr
    record["phase"] = phase
    record["time"] = time.time()
    return json.dumps(record, sort_keys=True)


def strip_volatile(line: str) -> str:
    """Canonical form of a metrics line for determinism comparisons.

    Wall-clock time is provenance, not part of the numeric trajectory, so
    it is dropped before comparing logs bit-for-bit.
    """
    record = json.loads(line)
    record.pop("time", None)
    return json.dumps(record, sort_keys=True)


def train(
    model: DDPAE,
    source,
    config: TrainConfig,
    out_dir,
    priors: PriorSpec | None = None,
    resume_from=None,
) -> TrainResult:
    """Run the optimization loop, streaming checkpoints and a metrics log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"
    priors = priors or PriorSpec()
    phase_switch = config.resolved_phase_switch()
    T, K = model.config.input_len, model.config.pred_len

    noise_gen = torch.Generator().manual_seed(config.seed)
    data_rng = np.random.default_rng([config.seed, 1])
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr_initial)
    start_iter = 0

    if resume_from is not None:
        loaded = ckpt.load_checkpoint(resume_from)
        ckpt.apply_to_model(model, loaded)
        ckpt.restore_optimizer(optimizer, loaded)
        ckpt.restore_rng(loaded.header["rng"], noise_gen, data_rng)
        start_iter = loaded.iteration

    def save(iteration: int, name: str | None = None) -> Path:
        path = out_dir / (name or f"ckpt_{iteration:07d}.ddpae")
        return ckpt.save_checkpoint(
            path, model, optimizer, iteration=iteration,
            model_config=to_dict(model.config), train_config=to_dict(config),
            rng=ckpt.capture_rng(noise_gen, data_rng),
        )

    last_checkpoint = save(start_iter)
    log = open(metrics_path, "a" if resume_from is not None else "w")
    try:
        for it in range(start_iter, config.iterations):
            lr = config.lr_at(it)
            for group in optimizer.param_groups:
                group["lr"] = lr
            phase = (
                "both"
                if (it < phase_switch or config.train_both_losses_throughout)
                else "prediction-only"
            )
            batch = torch.from_numpy(source.next_batch(config.batch_size, data_rng))
            inputs, targets = batch[:, :T], batch[:, T:]
            output = model(inputs, pred_len=K, mode="stochastic", generator=noise_gen)
            losses = elbo_loss(
                output, inputs, targets, priors, phase=phase, kl_weight=config.kl_weight
            )
            if not math.isfinite(float(losses.total)):
                raise TrainingDiverged(it + 1, last_checkpoint)
            optimizer.zero_grad()
            losses.total.backward()
            optimizer.step()
            if (it + 1) % config.log_every == 0:
                log.write(metrics_line(it + 1, losses.as_dict(), lr, phase) + "\n")
                log.flush()
            if (it + 1) % config.checkpoint_every == 0:
                last_checkpoint = save(it + 1)
    finally:
        log.close()
    final = save(config.iterations, "ckpt_final.ddpae")
    return TrainResult(
        final_checkpoint=final,
        metrics_path=metrics_path,
        iterations_run=config.iterations - start_iter,
    )
