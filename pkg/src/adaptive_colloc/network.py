"""Feed-forward tanh network: parameters, initialization, evaluation.

Parameters serialize to a single flat vector in layer order, each layer
contributing its weight matrix in row-major order followed by its bias.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases of a feed-forward tanh network, 2 inputs -> 1 output."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)  # weights[l]: (sizes[l], sizes[l+1])
    biases: list[np.ndarray] = field(repr=False)   # biases[l]: (sizes[l+1],)

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def flat_size(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def _check_layer_sizes(layer_sizes) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if sizes[0] != 2 or sizes[-1] != 1:
        raise ValueError(f"layer sizes must start at 2 and end at 1, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all layer sizes must be >= 1, got {sizes}")
    return sizes


def init_params(layer_sizes, seed: int) -> NetworkParams:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    sizes = _check_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(layer_sizes=sizes, weights=weights, biases=biases)


def forward(params: NetworkParams, points: np.ndarray) -> np.ndarray:
    """Network output at each point: affine -> tanh repeated, last layer affine."""
    a = np.asarray(points, dtype=float)
    squeeze = a.ndim == 1
    a = np.atleast_2d(a)
    if a.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"points must have shape (m, {params.layer_sizes[0]}), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("points contain non-finite values")
    last = params.num_layers - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if l != last:
            a = np.tanh(a)
    out = a[:, 0]
    return out[0] if squeeze else out


def flatten(params: NetworkParams) -> np.ndarray:
    """Concatenate all weights (row-major) and biases in layer order."""
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten(flat: np.ndarray, layer_sizes) -> NetworkParams:
    """Inverse of flatten for the given architecture."""
    sizes = _check_layer_sizes(layer_sizes)
    flat = np.asarray(flat, dtype=float)
    expected = sum(fi * fo + fo for fi, fo in zip(sizes[:-1], sizes[1:]))
    if flat.shape != (expected,):
        raise ValueError(f"flat vector has length {flat.shape}, expected ({expected},)")
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out).copy())
        pos += fan_in * fan_out
        biases.append(flat[pos : pos + fan_out].copy())
        pos += fan_out
    return NetworkParams(layer_sizes=sizes, weights=weights, biases=biases)


_CKPT_MAGIC = b"ACNET1\n"


def save_checkpoint(path: Path | str, params: NetworkParams, seed: int, epoch: int) -> None:
    """Binary checkpoint: text header (layer_sizes, seed, epoch) + flat float64."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sizes = ",".join(str(s) for s in params.layer_sizes)
    header = f"layer_sizes={sizes} seed={seed} epoch={epoch}\n".encode()
    blob = flatten(params).astype("<f8").tobytes()
    with path.open("wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(blob)


def load_checkpoint(path: Path | str) -> tuple[NetworkParams, int, int]:
    """Read a checkpoint; returns (params, seed, epoch)."""
    raw = Path(path).read_bytes()
    if not raw.startswith(_CKPT_MAGIC):
        raise ValueError(f"{path}: not a network checkpoint")
    off = len(_CKPT_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    fields = dict(kv.split("=") for kv in raw[off : off + hlen].decode().split())
    off += hlen
    sizes = tuple(int(s) for s in fields["layer_sizes"].split(","))
    flat = np.frombuffer(raw[off:], dtype="<f8").astype(float)
    return unflatten(flat, sizes), int(fields["seed"]), int(fields["epoch"])
