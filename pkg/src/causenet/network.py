"""The joint feed-forward network: d+1 sub-networks with private masked
input layers, shared hidden layers with ReLU activations, and one linear
output head per sub-network.

Sub-network k reconstructs feature k (the target for k=0) without reading
feature k itself; which other inputs it may read is governed by a boolean
allow-mask over (input, sub-network) pairs. Input weights live in a single
3-index array `theta1[i, j, k]`: input neuron i to first-hidden neuron j of
sub-network k.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ShapeError
from .graphs import validate_mask
from .numerics import rng

TASKS = ("regression", "classification")

# Input-layer weights start at a tenth of their Glorot limit. Their group
# norms are read as causal-effect magnitudes, so they must start close to
# zero: edges earn weight from the data instead of having to shed a large
# random init against the structure penalties.
INPUT_LAYER_GAIN = 0.1


def default_hidden_sizes(d: int) -> tuple[int, ...]:
    """Three hidden layers sized 2v, ceil(2v/3), 2v for v = d+1 total nodes."""
    v = d + 1
    return (2 * v, max(1, math.ceil(2 * v / 3)), 2 * v)


@dataclass
class JointNetwork:
    task: str
    hidden_sizes: tuple[int, ...]
    theta1: np.ndarray                # (d+1, h1, d+1)
    hidden_weights: list[np.ndarray]  # (h_l, h_{l+1}) for consecutive hidden layers
    hidden_biases: list[np.ndarray]   # (h_l,) per hidden layer, shared across sub-networks
    out_weights: np.ndarray           # (h_last, d+1)
    out_biases: np.ndarray            # (d+1,)
    mask: np.ndarray                  # (d+1, d+1) bool allow-matrix
    seed: int

    @property
    def d(self) -> int:
        return self.theta1.shape[0] - 1

    @property
    def width(self) -> int:
        """First hidden layer width."""
        return self.theta1.shape[1]

    def copy(self) -> "JointNetwork":
        return replace(
            self,
            theta1=self.theta1.copy(),
            hidden_weights=[w.copy() for w in self.hidden_weights],
            hidden_biases=[b.copy() for b in self.hidden_biases],
            out_weights=self.out_weights.copy(),
            out_biases=self.out_biases.copy(),
            mask=self.mask.copy(),
        )

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """Trainable tensors in a fixed order."""
        pairs: list[tuple[str, np.ndarray]] = [("theta1", self.theta1)]
        pairs += [(f"hidden_w{i}", w) for i, w in enumerate(self.hidden_weights)]
        pairs += [(f"hidden_b{i}", b) for i, b in enumerate(self.hidden_biases)]
        pairs += [("out_w", self.out_weights), ("out_b", self.out_biases)]
        return pairs

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        if name == "theta1":
            self.theta1 = value
        elif name == "out_w":
            self.out_weights = value
        elif name == "out_b":
            self.out_biases = value
        elif name.startswith("hidden_w"):
            self.hidden_weights[int(name[8:])] = value
        elif name.startswith("hidden_b"):
            self.hidden_biases[int(name[8:])] = value
        else:
            raise KeyError(name)


def _glorot(generator: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return generator.uniform(-limit, limit, size=shape)


def init_network(
    d: int,
    hidden_sizes: tuple[int, ...] | None = None,
    task: str = "regression",
    seed: int = 0,
) -> JointNetwork:
    """Fresh Glorot-initialized network; deterministic for a given seed.

    The mask starts all-allowed except the diagonal (the self-mask), and the
    diagonal input-weight groups are zeroed accordingly.
    """
    if d < 1:
        raise ConfigError("need at least one input feature (d >= 1)")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    sizes = tuple(hidden_sizes) if hidden_sizes is not None else default_hidden_sizes(d)
    if not sizes or any(h < 1 for h in sizes):
        raise ConfigError("hidden_sizes must be a non-empty tuple of positive ints")
    n = d + 1
    g = rng(seed)
    theta1 = INPUT_LAYER_GAIN * _glorot(g, (n, sizes[0], n), fan_in=n, fan_out=sizes[0])
    hidden_weights = [
        _glorot(g, (sizes[i], sizes[i + 1]), sizes[i], sizes[i + 1])
        for i in range(len(sizes) - 1)
    ]
    out_weights = _glorot(g, (sizes[-1], n), fan_in=sizes[-1], fan_out=1)
    # Slightly positive hidden biases keep ReLU units alive at the start and
    # keep pre-activations off the exact kink.
    hidden_biases = [np.full(h, 0.01) for h in sizes]
    out_biases = np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    for k in range(n):
        theta1[k, :, k] = 0.0
    return JointNetwork(
        task=task,
        hidden_sizes=sizes,
        theta1=theta1,
        hidden_weights=hidden_weights,
        hidden_biases=hidden_biases,
        out_weights=out_weights,
        out_biases=out_biases,
        mask=mask,
        seed=seed,
    )


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_pass(net: JointNetwork, batch: np.ndarray):
    """Full forward pass keeping intermediates for backpropagation.

    Returns (pre_activations, activations, outputs) where outputs[n, k] is
    the linear output of sub-network k on row n.
    """
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.d + 1:
        raise ShapeError(f"batch must have {net.d + 1} columns, got {x.shape}")
    z = np.einsum("ni,ihk->nhk", x, net.theta1) + net.hidden_biases[0][None, :, None]
    zs = [z]
    a = np.maximum(z, 0.0)
    acts = [a]
    for w, b in zip(net.hidden_weights, net.hidden_biases[1:]):
        z = np.einsum("nhk,hg->ngk", a, w) + b[None, :, None]
        a = np.maximum(z, 0.0)
        zs.append(z)
        acts.append(a)
    outputs = np.einsum("ngk,gk->nk", a, net.out_weights) + net.out_biases[None, :]
    return zs, acts, outputs


def forward(net: JointNetwork, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(prediction vector, reconstruction matrix) on a standardized batch.

    The reconstruction matrix holds the linear outputs of all d+1
    sub-networks; the prediction is sub-network 0's output, pushed through a
    sigmoid for classification tasks.
    """
    _, _, outputs = forward_pass(net, batch)
    pred = sigmoid(outputs[:, 0]) if net.task == "classification" else outputs[:, 0]
    return pred, outputs


def compute_adjacency(net: JointNetwork) -> np.ndarray:
    """Nonnegative hollow matrix of input-weight group norms.

    w[i, k] = sqrt(sum_j theta1[i, j, k]^2): the magnitude of feature i's
    direct effect on sub-network k's reconstruction.
    """
    return np.sqrt(np.einsum("ihk,ihk->ik", net.theta1, net.theta1))


def apply_mask(net: JointNetwork, mask: np.ndarray) -> JointNetwork:
    """Return a copy with the given allow-mask installed and the masked
    input-weight groups zeroed. The diagonal is forced to masked."""
    allowed = validate_mask(np.asarray(mask, dtype=bool) & ~np.eye(net.d + 1, dtype=bool), net.d + 1)
    out = net.copy()
    out.mask = allowed
    out.theta1 = out.theta1 * allowed[:, None, :]
    return out


def _encode_array(a: np.ndarray) -> dict:
    contiguous = np.ascontiguousarray(a)
    return {
        "shape": list(contiguous.shape),
        "dtype": str(contiguous.dtype),
        "data": base64.b64encode(contiguous.tobytes()).decode("ascii"),
    }


def _decode_array(payload: dict) -> np.ndarray:
    raw = base64.b64decode(payload["data"])
    return np.frombuffer(raw, dtype=payload["dtype"]).reshape(payload["shape"]).copy()


def checkpoint_dict(net: JointNetwork) -> dict:
    """Self-describing checkpoint payload; round-trips bit-exactly."""
    return {
        "format": "causenet-checkpoint-v1",
        "task": net.task,
        "d": net.d,
        "hidden_sizes": list(net.hidden_sizes),
        "seed": net.seed,
        "mask": _encode_array(net.mask.astype(np.uint8)),
        "arrays": {name: _encode_array(value) for name, value in net.parameters()},
    }


def checkpoint_bytes(net: JointNetwork) -> bytes:
    return json.dumps(checkpoint_dict(net), sort_keys=True).encode("utf-8")


def save_checkpoint(net: JointNetwork, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(net))


def network_from_checkpoint(payload: dict) -> JointNetwork:
    if payload.get("format") != "causenet-checkpoint-v1":
        raise ConfigError("not a recognized network checkpoint")
    arrays = {name: _decode_array(spec) for name, spec in payload["arrays"].items()}
    sizes = tuple(payload["hidden_sizes"])
    hidden_weights = [arrays[f"hidden_w{i}"] for i in range(len(sizes) - 1)]
    hidden_biases = [arrays[f"hidden_b{i}"] for i in range(len(sizes))]
    return JointNetwork(
        task=payload["task"],
        hidden_sizes=sizes,
        theta1=arrays["theta1"],
        hidden_weights=hidden_weights,
        hidden_biases=hidden_biases,
        out_weights=arrays["out_w"],
        out_biases=arrays["out_b"],
        mask=_decode_array(payload["mask"]).astype(bool),
        seed=int(payload["seed"]),
    )


def load_checkpoint(path: str) -> JointNetwork:
    with open(path, "rb") as fh:
        return network_from_checkpoint(json.loads(fh.read().decode("utf-8")))
