"""Feedforward networks: affine layers, scalar activations, batch norm.

The network is an alternating composition of affine maps and a scalar
activation, ending with an affine output layer of width one.  All
arithmetic is float64: the convergence-rate measurements downstream need
gradient fidelity, not throughput.  Batch normalization, when enabled,
acts on each hidden pre-activation; in training mode it normalizes by the
current batch statistics and records them, in inference mode it reuses the
recorded statistics (training is full batch, so the recorded statistics
are the statistics of the training set under the stored weights).

Backward passes are exact reverse-mode differentiation of the forward
pass, including the batch-statistics pathway; the ReLU subgradient at 0
is taken to be 0.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .rng import generator

_BN_EPS = 1e-5
_FORMAT_VERSION = 1
_MAGIC = b"QMLN"

ACTIVATIONS = ("sigmoid", "tanh", "relu")


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation, from pre-activation z and output a."""
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture: depth counts hidden layers, width is uniform."""

    input_dim: int
    depth: int
    width: int
    activation: str = "sigmoid"
    batch_norm: bool = False

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("at least one hidden layer is required")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def layer_dims(self) -> list[int]:
        """[d, width, ..., width, 1] with depth hidden entries."""
        return [self.input_dim] + [self.width] * self.depth + [1]

    def affine_param_count(self) -> int:
        """Closed form sum over layers of (fan_in + 1) * fan_out."""
        dims = self.layer_dims
        return sum((dims[k] + 1) * dims[k + 1] for k in range(len(dims) - 1))

    def param_count(self) -> int:
        extra = 2 * self.width * self.depth if self.batch_norm else 0
        return self.affine_param_count() + extra


@dataclass
class NetworkParams:
    """Per-layer weights/biases plus optional batch-norm state.

    Treated as an immutable value between training steps; the only
    mutation is the recording of batch statistics by a training-mode
    forward pass.
    """

    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_scale: list[np.ndarray] = field(default_factory=list)
    bn_shift: list[np.ndarray] = field(default_factory=list)
    bn_mean: list[Optional[np.ndarray]] = field(default_factory=list)
    bn_var: list[Optional[np.ndarray]] = field(default_factory=list)

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            config=self.config,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            bn_scale=[g.copy() for g in self.bn_scale],
            bn_shift=[b.copy() for b in self.bn_shift],
            bn_mean=[m.copy() if m is not None else None for m in self.bn_mean],
            bn_var=[v.copy() if v is not None else None for v in self.bn_var],
        )

    def param_count(self) -> int:
        n = sum(w.size for w in self.weights) + sum(b.size for b in self.biases)
        n += sum(g.size for g in self.bn_scale) + sum(b.size for b in self.bn_shift)
        return n

    # -- flat-vector view, used by the optimizer and by finite differences --

    def _arrays(self) -> list[np.ndarray]:
        return self.weights + self.biases + self.bn_scale + self.bn_shift

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays()])

    def set_vector(self, vec: np.ndarray) -> None:
        pos = 0
        for a in self._arrays():
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size
        if pos != vec.size:
            raise ValueError("vector length does not match parameter count")

    def weight_vector(self) -> np.ndarray:
        """Weights only (no biases, no batch-norm), the penalized set."""
        return np.concatenate([w.ravel() for w in self.weights])


@dataclass
class GradientSet:
    """Gradients mirroring NetworkParams' trainable arrays."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_scale: list[np.ndarray]
    bn_shift: list[np.ndarray]

    def to_vector(self) -> np.ndarray:
        arrays = self.weights + self.biases + self.bn_scale + self.bn_shift
        return np.concatenate([a.ravel() for a in arrays])


def init_xavier(cfg: NetworkConfig, seed: int) -> NetworkParams:
    """Xavier-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases."""
    rng = generator(seed, 0x1A1)
    dims = cfg.layer_dims
    weights, biases = [], []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    params = NetworkParams(config=cfg, weights=weights, biases=biases)
    if cfg.batch_norm:
        params.bn_scale = [np.ones(cfg.width) for _ in range(cfg.depth)]
        params.bn_shift = [np.zeros(cfg.width) for _ in range(cfg.depth)]
        params.bn_mean = [None] * cfg.depth
        params.bn_var = [None] * cfg.depth
    return params


def forward_with_cache(params: NetworkParams, batch: np.ndarray,
                       training: bool = False):
    """Network outputs plus the per-layer cache needed by backward.

    In training mode with batch norm the batch statistics are recorded on
    ``params`` for later inference-mode evaluation.
    """
    cfg = params.config
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cfg.input_dim:
        raise ValueError(f"batch must have shape (n, {cfg.input_dim})")
    if cfg.batch_norm and training and X.shape[0] < 2:
        raise ValueError("batch norm in training mode needs batch size >= 2")
    A = X
    cache = []
    n_layers = len(params.weights)
    for k in range(n_layers):
        Z = A @ params.weights[k].T + params.biases[k]
        layer = {"A_in": A, "Z": Z}
        if k == n_layers - 1:
            cache.append(layer)
            return Z[:, 0], cache
        Y = Z
        if cfg.batch_norm:
            if training:
                mu = Z.mean(axis=0)
                var = Z.var(axis=0)
                params.bn_mean[k] = mu.copy()
                params.bn_var[k] = var.copy()
            else:
                if params.bn_mean[k] is None:
                    raise ValueError("no recorded batch statistics; run a "
                                     "training-mode forward pass first")
                mu, var = params.bn_mean[k], params.bn_var[k]
            inv = 1.0 / np.sqrt(var + _BN_EPS)
            zhat = (Z - mu) * inv
            Y = params.bn_scale[k] * zhat + params.bn_shift[k]
            layer.update(zhat=zhat, inv=inv, bn_training=training)
        A = _act(cfg.activation, Y)
        layer["Y"] = Y
        layer["A_out"] = A
        cache.append(layer)
    raise AssertionError("unreachable")


def forward(params: NetworkParams, batch: np.ndarray,
            training: bool = False) -> np.ndarray:
    """Network outputs for a batch of points, shape (n,)."""
    out, _ = forward_with_cache(params, batch, training=training)
    return out


def backward(params: NetworkParams, cache: list, upstream: np.ndarray) -> GradientSet:
    """Gradients of sum_i upstream_i * output_i w.r.t. every parameter.

    ``cache`` must come from a forward pass over the same batch; with
    batch norm it must be a training-mode pass so the batch-statistics
    pathway is differentiated.
    """
    cfg = params.config
    if not cache or "Z" not in cache[-1]:
        raise ValueError("missing forward cache")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (cache[0]["A_in"].shape[0],):
        raise ValueError("upstream gradient must have one entry per batch row")
    n_layers = len(params.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    gscale = [np.zeros_like(g) for g in params.bn_scale]
    gshift = [np.zeros_like(b) for b in params.bn_shift]

    dZ = upstream[:, None]
    for k in range(n_layers - 1, -1, -1):
        layer = cache[k]
        gw[k] = dZ.T @ layer["A_in"]
        gb[k] = dZ.sum(axis=0)
        if k == 0:
            break
        dA = dZ @ params.weights[k]
        prev = cache[k - 1]
        dY = dA * _act_grad(cfg.activation, prev["Y"], prev["A_out"])
        if cfg.batch_norm:
            if not prev.get("bn_training", False):
                raise ValueError("backward through batch norm requires a "
                                 "training-mode forward cache")
            zhat, inv = prev["zhat"], prev["inv"]
            gscale[k - 1] = (dY * zhat).sum(axis=0)
            gshift[k - 1] = dY.sum(axis=0)
            dzhat = dY * params.bn_scale[k - 1]
            dZ = inv * (dzhat - dzhat.mean(axis=0)
                        - zhat * (dzhat * zhat).mean(axis=0))
        else:
            dZ = dY
    return GradientSet(weights=gw, biases=gb, bn_scale=gscale, bn_shift=gshift)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model(params: NetworkParams, path) -> None:
    """Write a self-describing flat model file.

    Layout: magic, uint32 header length, UTF-8 JSON header (format
    version, config, array manifest), then the arrays as little-endian
    float64 in manifest order.
    """
    arrays = []
    manifest = []
    for name, lst in (("weight", params.weights), ("bias", params.biases),
                      ("bn_scale", params.bn_scale), ("bn_shift", params.bn_shift)):
        for k, arr in enumerate(lst):
            manifest.append({"name": f"{name}_{k}", "shape": list(arr.shape)})
            arrays.append(arr)
    for name, lst in (("bn_mean", params.bn_mean), ("bn_var", params.bn_var)):
        for k, arr in enumerate(lst):
            if arr is not None:
                manifest.append({"name": f"{name}_{k}", "shape": list(arr.shape)})
                arrays.append(arr)
    header = json.dumps({
        "format_version": _FORMAT_VERSION,
        "config": asdict(params.config),
        "arrays": manifest,
    }).encode()
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    for arr in arrays:
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> NetworkParams:
    """Read a model file written by :func:`save_model`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError("not a model file")
    hlen = struct.unpack("<I", data[4:8])[0]
    header = json.loads(data[8:8 + hlen].decode())
    if header["format_version"] != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {header['format_version']}")
    cfg = NetworkConfig(**header["config"])
    pos = 8 + hlen
    named = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=pos)
        named[entry["name"]] = arr.reshape(shape).astype(np.float64)
        pos += size * 8
    n_layers = cfg.depth + 1
    params = NetworkParams(
        config=cfg,
        weights=[named[f"weight_{k}"] for k in range(n_layers)],
        biases=[named[f"bias_{k}"] for k in range(n_layers)],
    )
    if cfg.batch_norm:
        params.bn_scale = [named[f"bn_scale_{k}"] for k in range(cfg.depth)]
        params.bn_shift = [named[f"bn_shift_{k}"] for k in range(cfg.depth)]
        params.bn_mean = [named.get(f"bn_mean_{k}") for k in range(cfg.depth)]
        params.bn_var = [named.get(f"bn_var_{k}") for k in range(cfg.depth)]
    return params
