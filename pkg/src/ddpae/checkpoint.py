"""Checkpoint files: named little-endian arrays behind a JSON manifest.

Layout: 8-byte magic, u64 header length, UTF-8 JSON header, then the raw
array payload. The header carries the configs, RNG states, iteration
counter, and a manifest entry (name, dtype, shape, offset, nbytes) for
every array; loading validates names and shapes against the target model.
"""
from __future__ import annotations

import base64
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

MAGIC = b"DDPAECK1"
VERSION = 1

_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def _to_le(arr: np.ndarray) -> np.ndarray:
    kind = {"float32": "<f4", "float64": "<f8", "int64": "<i8"}.get(str(arr.dtype))
    if kind is None:
        raise TypeError(f"unsupported checkpoint dtype {arr.dtype}")
    return np.ascontiguousarray(arr.astype(_DTYPES[kind], copy=False)), kind


@dataclass
class Checkpoint:
    header: dict
    arrays: dict[str, np.ndarray]

    @property
    def iteration(self) -> int:
        return int(self.header["iteration"])


def capture_rng(noise_generator: torch.Generator | None, data_rng: np.random.Generator | None) -> dict:
    state: dict = {}
    if noise_generator is not None:
        state["torch"] = base64.b64encode(
            noise_generator.get_state().numpy().tobytes()
        ).decode("ascii")
    if data_rng is not None:
        state["numpy"] = data_rng.bit_generator.state
    return state


def restore_rng(state: dict, noise_generator: torch.Generator | None = None,
                data_rng: np.random.Generator | None = None) -> None:
    if noise_generator is not None and "torch" in state:
        raw = base64.b64decode(state["torch"])
        noise_generator.set_state(torch.from_numpy(np.frombuffer(raw, dtype=np.uint8).copy()))
    if data_rng is not None and "numpy" in state:
        data_rng.bit_generator.state = state["numpy"]


def save_checkpoint(
    path,
    model: torch.nn.Module,
    optimizer: torch.optim.Optimizer | None = None,
    iteration: int = 0,
    model_config: dict | None = None,
    train_config: dict | None = None,
    rng: dict | None = None,
    extra: dict | None = None,
) -> Path:
    """Write a checkpoint atomically (temp file, then rename)."""
    arrays: dict[str, np.ndarray] = {}
    for name, p in model.state_dict().items():
        arrays[f"model/{name}"] = p.detach().cpu().numpy()

    param_names = [name for name, _ in model.named_parameters()]
    adam_meta = None
    if optimizer is not None:
        sd = optimizer.state_dict()
        steps = {}
        for idx, st in sd["state"].items():
            for key in ("exp_avg", "exp_avg_sq"):
                if key in st:
                    arrays[f"adam/{idx}/{key}"] = st[key].detach().cpu().numpy()
            step = st.get("step", 0)
            steps[str(idx)] = float(step) if not torch.is_tensor(step) else float(step.item())
        groups = []
        for g in sd["param_groups"]:
            groups.append({k: v for k, v in g.items() if k != "params"} | {"params": g["params"]})
        adam_meta = {"steps": steps, "param_groups": groups}

    manifest = []
    payload = bytearray()
    for name in sorted(arrays):
        le, kind = _to_le(arrays[name])
        manifest.append({
            "name": name, "dtype": kind, "shape": list(le.shape),
            "offset": len(payload), "nbytes": le.nbytes,
        })
        payload += le.tobytes()

    header = {
        "version": VERSION,
        "iteration": iteration,
        "model_config": model_config,
        "train_config": train_config,
        "param_names": param_names,
        "adam": adam_meta,
        "rng": rng or {},
        "extra": extra or {},
        "arrays": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        f.write(bytes(payload))
    os.replace(tmp, path)
    return path


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    (hlen,) = struct.unpack_from("<Q", raw, 8)
    header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    if header.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
    base = 16 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dt = _DTYPES[entry["dtype"]]
        start = base + entry["offset"]
        arr = np.frombuffer(raw, dtype=dt, count=entry["nbytes"] // dt.itemsize, offset=start)
        arrays[entry["name"]] = arr.reshape(entry["shape"])
    return Checkpoint(header=header, arrays=arrays)


def apply_to_model(model: torch.nn.Module, ckpt: Checkpoint) -> None:
    """Load model arrays, validating every name and shape on both sides."""
    state = model.state_dict()
    ckpt_names = {n[len("model/"):] for n in ckpt.arrays if n.startswith("model/")}
    missing = sorted(set(state) - ckpt_names)
    unexpected = sorted(ckpt_names - set(state))
    if missing or unexpected:
        raise ValueError(
            f"checkpoint/model mismatch: missing {missing!r}, unexpected {unexpected!r}"
        )
    new_state = {}
    for name, tensor in state.items():
        arr = ckpt.arrays[f"model/{name}"]
        if tuple(arr.shape) != tuple(tensor.shape):
            raise ValueError(
                f"checkpoint/model mismatch on {name!r}: shape {tuple(arr.shape)} "
                f"vs {tuple(tensor.shape)}"
            )
        new_state[name] = torch.from_numpy(arr.copy()).to(tensor.dtype)
    model.load_state_dict(new_state)


def restore_optimizer(optimizer: torch.optim.Optimizer, ckpt: Checkpoint) -> None:
    meta = ckpt.header.get("adam")
    if meta is None:
        return
    state = {}
    for key, step in meta["steps"].items():
        idx = int(key)
        entry = {"step": torch.tensor(step)}
        for name in ("exp_avg", "exp_avg_sq"):
            arr = ckpt.arrays.get(f"adam/{idx}/{name}")
            if arr is not None:
                entry[name] = torch.from_numpy(arr.copy())
        state[idx] = entry
    optimizer.load_state_dict({"state": state, "param_groups": meta["param_groups"]})
