"""Dilated causal convolutional encoder with exact reverse-mode gradients.

Architecture (channels-last, all float64):

    block 0:            h = relu(conv_k(x; dilation 1))        F  -> hidden
    blocks 1..n-1:      h = relu(conv_k(h; dilation 2^b)) + h  hidden -> hidden
    output projection:  y = h @ W_out^T + b_out                 hidden -> F'

Convolutions pad on the left only, so the output at time t depends on
inputs at times <= t. The backward pass is written out layer by layer;
there is no autograd framework underneath.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, ShapeMismatch

CHECKPOINT_FORMAT = "floss-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    input_features: int
    repr_features: int = 64
    hidden_width: int = 64
    n_blocks: int = 4
    kernel_width: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("input_features", "repr_features", "hidden_width", "n_blocks", "kernel_width"):
            if getattr(self, name) < 1:
                raise InvalidSpec(f"{name} must be >= 1")

    @property
    def receptive_field(self) -> int:
        # 1 + (k-1) * (2^0 + 2^1 + ... + 2^(n_blocks-1))
        return 1 + (self.kernel_width - 1) * ((1 << self.n_blocks) - 1)

    def dilation(self, block: int) -> int:
        return 1 << block


@dataclass
class EncoderParams:
    """Config plus named parameter arrays in a fixed iteration order."""

    config: EncoderConfig
    arrays: dict

    @property
    def parameter_count(self) -> int:
        return int(sum(a.size for a in self.arrays.values()))

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.config, {k: v.copy() for k, v in self.arrays.items()})


def init_encoder(cfg: EncoderConfig) -> EncoderParams:
    """Seeded uniform fan-in initialization; biases start at zero."""
    rng = np.random.default_rng(cfg.seed)
    arrays: dict = {}

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    k, hidden = cfg.kernel_width, cfg.hidden_width
    arrays["block0_w"] = uniform((hidden, cfg.input_features, k), cfg.input_features * k)
    arrays["block0_b"] = np.zeros(hidden)
    for b in range(1, cfg.n_blocks):
        arrays[f"block{b}_w"] = uniform((hidden, hidden, k), hidden * k)
        arrays[f"block{b}_b"] = np.zeros(hidden)
    arrays["out_w"] = uniform((cfg.repr_features, hidden), hidden)
    arrays["out_b"] = np.zeros(cfg.repr_features)
    return EncoderParams(cfg, arrays)


def _causal_conv(x: np.ndarray, w: np.ndarray, b: np.ndarray, dilation: int) -> np.ndarray:
    """Left-padded conv: out[:, t] = b + Σ_q x[:, t-(k-1-q)·d] @ w[:,:,q]^T."""
    n, length, _ = x.shape
    c_out, c_in, k = w.shape
    pad = (k - 1) * dilation
    if pad:
        x = np.concatenate([np.zeros((n, pad, c_in)), x], axis=1)
    out = np.broadcast_to(b, (n, length, c_out)).copy()
    for q in range(k):
        out += x[:, q * dilation : q * dilation + length, :] @ w[:, :, q].T
    return out


def _causal_conv_backward(x, w, grad_out, dilation):
    n, length, c_in = x.shape
    c_out, _, k = w.shape
    pad = (k - 1) * dilation
    xpad = np.concatenate([np.zeros((n, pad, c_in)), x], axis=1) if pad else x
    grad_w = np.zeros_like(w)
    grad_xpad = np.zeros_like(xpad)
    go_flat = grad_out.reshape(n * length, c_out)
    for q in range(k):
        seg = xpad[:, q * dilation : q * dilation + length, :]
        grad_w[:, :, q] = go_flat.T @ seg.reshape(n * length, c_in)
        grad_xpad[:, q * dilation : q * dilation + length, :] += grad_out @ w[:, :, q]
    grad_b = grad_out.sum(axis=(0, 1))
    return grad_w, grad_b, grad_xpad[:, pad:, :]


def _forward(p: EncoderParams, x: np.ndarray, keep_cache: bool):
    cfg = p.config
    cache = [] if keep_cache else None
    pre = _causal_conv(x, p.arrays["block0_w"], p.arrays["block0_b"], 1)
    h = np.maximum(pre, 0.0)
    if keep_cache:
        cache.append((x, pre))
    for b in range(1, cfg.n_blocks):
        pre = _causal_conv(h, p.arrays[f"block{b}_w"], p.arrays[f"block{b}_b"], cfg.dilation(b))
        if keep_cache:
            cache.append((h, pre))
        h = np.maximum(pre, 0.0) + h
    y = h @ p.arrays["out_w"].T + p.arrays["out_b"]
    return y, h, cache


def encode(p: EncoderParams, x) -> np.ndarray:
    """Map an (N, L, F) input slice to its (N, L, F') representation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != p.config.input_features:
        raise ShapeMismatch(
            f"expected (N, L, {p.config.input_features}), got shape {x.shape}"
        )
    if x.shape[1] < 1:
        raise ShapeMismatch("time axis must have length >= 1")
    y, _, _ = _forward(p, x, keep_cache=False)
    return y


def forward_with_cache(p: EncoderParams, x: np.ndarray):
    """Forward pass keeping per-layer activations for backward_from_cache."""
    y, h_last, cache = _forward(p, x, keep_cache=True)
    return y, (h_last, cache)


def backward_from_cache(p: EncoderParams, state, upstream: np.ndarray) -> tuple[dict, np.ndarray]:
    """Backward pass reusing the activations captured by forward_with_cache."""
    cfg = p.config
    h_last, cache = state
    grads = {}
    n, length = upstream.shape[0], upstream.shape[1]
    go_flat = upstream.reshape(n * length, cfg.repr_features)
    grads["out_w"] = go_flat.T @ h_last.reshape(n * length, cfg.hidden_width)
    grads["out_b"] = upstream.sum(axis=(0, 1))
    grad_h = upstream @ p.arrays["out_w"]
    for b in range(cfg.n_blocks - 1, 0, -1):
        inp, pre = cache[b]
        grad_pre = grad_h * (pre > 0.0)
        gw, gb, gx = _causal_conv_backward(inp, p.arrays[f"block{b}_w"], grad_pre, cfg.dilation(b))
        grads[f"block{b}_w"] = gw
        grads[f"block{b}_b"] = gb
        grad_h = gx + grad_h  # residual connection
    inp, pre = cache[0]
    grad_pre = grad_h * (pre > 0.0)
    gw, gb, grad_x = _causal_conv_backward(inp, p.arrays["block0_w"], grad_pre, 1)
    grads["block0_w"] = gw
    grads["block0_b"] = gb
    return grads, grad_x


def backward(p: EncoderParams, x, upstream) -> tuple[dict, np.ndarray]:
    """Exact gradients of Σ(upstream ⊙ encode(p, x)) wrt params and input.

    ``upstream`` is dL/drepresentation with shape (N, L, F'). Returns a
    gradient dict keyed like ``p.arrays`` plus dL/dx.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != p.config.input_features:
        raise ShapeMismatch(f"bad input shape {x.shape}")
    expected = (x.shape[0], x.shape[1], p.config.repr_features)
    if upstream.shape != expected:
        raise ShapeMismatch(f"upstream shape {upstream.shape}, expected {expected}")

    _, state = forward_with_cache(p, x)
    return backward_from_cache(p, state, upstream)


# --- checkpoint container ---
#
# JSON object with keys: format, version, config, seed, metadata, params.
# Each entry of params maps a parameter name to {"shape": [...], "dtype":
# "float64", "data": base64 of the C-order little-endian float64 bytes}.


def save_checkpoint(p: EncoderParams, path, seed: int = 0, metadata: dict | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "input_features": p.config.input_features,
            "repr_features": p.config.repr_features,
            "hidden_width": p.config.hidden_width,
            "n_blocks": p.config.n_blocks,
            "kernel_width": p.config.kernel_width,
            "seed": p.config.seed,
        },
        "seed": seed,
        "metadata": metadata or {},
        "params": {
            name: {
                "shape": list(arr.shape),
                "dtype": "float64",
                "data": base64.b64encode(
                    np.ascontiguousarray(arr, dtype="<f8").tobytes()
                ).decode("ascii"),
            }
            for name, arr in p.arrays.items()
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def load_checkpoint(path) -> tuple[EncoderParams, int, dict]:
    """Read a checkpoint back as ``(params, seed, metadata)``."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise InvalidSpec(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise InvalidSpec(f"{path}: unsupported checkpoint version {payload.get('version')}")
    cfg = EncoderConfig(**payload["config"])
    arrays = {}
    for name, entry in payload["params"].items():
        raw = base64.b64decode(entry["data"])
        arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])
    expected = init_encoder(cfg).arrays
    if set(arrays) != set(expected) or any(arrays[k].shape != expected[k].shape for k in expected):
        raise InvalidSpec(f"{path}: parameter names/shapes do not match the config")
    ordered = {name: arrays[name] for name in expected}
    return EncoderParams(cfg, ordered), int(payload.get("seed", 0)), payload.get("metadata", {})
