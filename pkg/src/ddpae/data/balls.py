"""Elastic bouncing-ball simulation and rasterization.

Equal-mass discs move in a square frame, reflecting off walls and exchanging
the velocity component along the center line when they collide. Integration
is event-driven inside each sub-step: the simulator advances to the exact
time of the next contact, applies the impulse there, and continues, so
kinetic energy is conserved to rounding and discs never interpenetrate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .video import VideoSequence

_TIME_EPS = 1e-9
_MAX_EVENTS_PER_STEP = 10_000


@dataclass
class BallConfig:
    n_balls: int = 4
    frame_size: int = 128
    radius: float = 12.0
    speed_range: tuple[float, float] = (3.0, 6.0)
    max_speed: float = 6.0
    input_len: int = 10
    pred_len: int = 10
    substeps: int = 10
    max_place_tries: int = 100

    @property
    def seq_len(self) -> int:
        return self.input_len + self.pred_len

    def __post_init__(self):
        if self.n_balls < 1:
            raise ValueError("n_balls must be >= 1")
        if self.speed_range[1] > self.max_speed:
            raise ValueError("speed_range may not exceed max_speed")


@dataclass
class BallState:
    positions: np.ndarray  # (n, 2), pixels, (x, y)
    velocities: np.ndarray  # (n, 2), pixels/frame
    radius: float
    frame_size: float
    mass: float = 1.0

    def copy(self) -> "BallState":
        return BallState(
            self.positions.copy(), self.velocities.copy(),
            self.radius, self.frame_size, self.mass,
        )


@dataclass
class CollisionEvent:
    """Diagnostic record of one impulse: wall bounce or ball-ball contact."""

    kind: str  # "wall" or "pair"
    time: float  # absolute time in frames since trajectory start
    balls: tuple[int, ...]
    velocities_before: np.ndarray
    velocities_after: np.ndarray


@dataclass
class BallTrajectory:
    states: list[BallState]
    rendered: VideoSequence
    events: list[CollisionEvent] = field(default_factory=list)

    def positions_array(self) -> np.ndarray:
        return np.stack([s.positions for s in self.states])

    def velocities_array(self) -> np.ndarray:
        return np.stack([s.velocities for s in self.states])


def kinetic_energy(state: BallState) -> float:
    return float(0.5 * state.mass * np.sum(state.velocities**2))


def resolve_penetration(state: BallState, max_iters: int = 50) -> BallState:
    """Repair overlapping or out-of-frame discs by symmetric separation."""
    state = state.copy()
    p, r, size = state.positions, state.radius, state.frame_size
    n = len(p)
    for _ in range(max_iters):
        moved = False
        for i in range(n):
            for j in range(i + 1, n):
                d = p[i] - p[j]
                dist = float(np.hypot(*d))
                if dist < 2.0 * r - _TIME_EPS:
                    if dist < 1e-12:  # coincident centers: split along x
                        d, dist = np.array([1.0, 0.0]), 1.0
                    shift = (2.0 * r - dist) / 2.0 * (d / dist)
                    p[i] += shift
                    p[j] -= shift
                    moved = True
        clipped = np.clip(p, r, size - r)
        if not np.array_equal(clipped, p):
            p[:] = clipped
            moved = True
        if not moved:
            break
    return state


def _wall_impact_times(p: np.ndarray, v: np.ndarray, r: float, size: float) -> np.ndarray:
    """Per ball/axis time until a wall contact; inf when receding or static."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t_high = (size - r - p) / v
        t_low = (r - p) / v
    times = np.where(v > 0, t_high, np.where(v < 0, t_low, np.inf))
    # fp residue can put a ball marginally past a wall; bounce immediately
    times = np.where((times < 0) & (times > -1e-6), 0.0, times)
    return np.where(times < 0, np.inf, times)


def _pair_impact_time(dp: np.ndarray, dv: np.ndarray, r: float) -> float:
    """Time until |dp + t*dv| = 2r, or inf when the pair never closes."""
    a = float(dv @ dv)
    if a == 0.0:
        return np.inf
    b = 2.0 * float(dp @ dv)
    c = float(dp @ dp) - (2.0 * r) ** 2
    if b >= 0.0:  # separating or tangential
        return np.inf
    if c <= 0.0:  # already touching and approaching
        return 0.0
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return np.inf
    t = (-b - np.sqrt(disc)) / (2.0 * a)
    return t if t >= -_TIME_EPS else np.inf


def _apply_pair_impulse(state: BallState, i: int, j: int) -> None:
    # Equal masses: exchange the velocity components along the center line.
    n_hat = state.positions[i] - state.positions[j]
    norm = float(np.hypot(*n_hat))
    if norm == 0.0:
        return
    n_hat = n_hat / norm
    w = float((state.velocities[i] - state.velocities[j]) @ n_hat)
    if w >= 0.0:  # separating at contact: no impulse
        return
    state.velocities[i] -= w * n_hat
    state.velocities[j] += w * n_hat


def _advance(state: BallState, dt: float, t0: float, events: list[CollisionEvent] | None) -> BallState:
    """Advance by dt, resolving every contact at its exact time of impact."""
    state = state.copy()
    p, v = state.positions, state.velocities
    r, size = state.radius, state.frame_size
    n = len(p)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    remaining = dt
    for _ in range(_MAX_EVENTS_PER_STEP):
        wall_times = _wall_impact_times(p, v, r, size)
        pair_times = np.array(
            [_pair_impact_time(p[i] - p[j], v[i] - v[j], r) for i, j in pairs]
        ) if pairs else np.empty(0)
        t_next = min(wall_times.min(initial=np.inf), pair_times.min(initial=np.inf))
        if t_next >= remaining:
            p += v * remaining
            return state
        t_next = max(t_next, 0.0)
        p += v * t_next
        remaining -= t_next
        t0 += t_next
        hit_walls = np.argwhere(wall_times <= t_next + _TIME_EPS)
        for ball, axis in hit_walls:
            before = v.copy() if events is not None else None
            v[ball, axis] = -v[ball, axis]
            if events is not None:
                events.append(CollisionEvent("wall", t0, (int(ball),), before, v.copy()))
        if pairs:
            for k in np.flatnonzero(pair_times <= t_next + _TIME_EPS):
                i, j = pairs[k]
                before = v.copy() if events is not None else None
                _apply_pair_impulse(state, i, j)
                if events is not None:
                    events.append(CollisionEvent("pair", t0, (i, j), before, v.copy()))
    raise RuntimeError("collision event cascade did not terminate")


def step_physics(state: BallState, dt: float = 1.0, events: list[CollisionEvent] | None = None) -> BallState:
    """One integration step: repair any penetration, then advance by dt frames."""
    state = resolve_penetration(state)
    return _advance(state, dt, 0.0, events)


def sample_initial_state(config: BallConfig, rng: np.random.Generator) -> BallState:
    """Rejection-sample non-overlapping discs with random velocities."""
    r, size = config.radius, float(config.frame_size)
    positions = np.empty((config.n_balls, 2))
    for i in range(config.n_balls):
        for attempt in range(config.max_place_tries):
            candidate = rng.uniform(r, size - r, size=2)
            if all(np.hypot(*(candidate - positions[j])) >= 2.0 * r for j in range(i)):
                positions[i] = candidate
                break
        else:
            raise ValueError(
                f"could not place {config.n_balls} radius-{r} balls in a "
                f"{config.frame_size}px frame after {config.max_place_tries} tries"
            )
    speeds = rng.uniform(*config.speed_range, size=config.n_balls)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=config.n_balls)
    velocities = np.stack([speeds * np.cos(angles), speeds * np.sin(angles)], axis=1)
    return BallState(positions, velocities, r, size)


def render_balls(state: BallState, size: int) -> np.ndarray:
    """Rasterize filled discs with a linear one-pixel edge falloff, clamped to 1."""
    coords = np.arange(size, dtype=np.float64) + 0.5
    xs, ys = np.meshgrid(coords, coords)  # pixel centers
    frame = np.zeros((size, size), dtype=np.float64)
    for cx, cy in state.positions:
        d = np.hypot(xs - cx, ys - cy)
        frame += np.clip(state.radius + 0.5 - d, 0.0, 1.0)
    return np.clip(frame, 0.0, 1.0).astype(np.float32)


def simulate_bouncing_balls(config: BallConfig, rng: np.random.Generator) -> BallTrajectory:
    """Simulate one sequence; returns per-frame states, rendering, and events."""
    state = sample_initial_state(config, rng)
    events: list[CollisionEvent] = []
    states = [state.copy()]
    sub_dt = 1.0 / config.substeps
    for t in range(config.seq_len - 1):
        for s in range(config.substeps):
            state = _advance(state, sub_dt, t + s * sub_dt, events)
        states.append(state.copy())
    frames = np.stack([render_balls(s, config.frame_size) for s in states])
    video = VideoSequence(frames, config.input_len, config.pred_len)
    return BallTrajectory(states=states, rendered=video, events=events)
