"""Minimal dense-network framework: exactly what the generator,
discriminator and predictor need, nothing more.

Everything runs in float64 numpy; the models are tiny (a few thousand
parameters) so reproducibility beats speed. Backward passes are exact
reverse-mode gradients of the forward map, including the gradient with
respect to the input batch (needed to push generator updates through the
frozen discriminator and predictor).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path as FilePath

import numpy as np

from linksynth.dataset import Normalizer, VersionError

CHECKPOINT_SCHEMA_VERSION = 1

ACTIVATIONS = ("identity", "relu", "sigmoid")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class MlpModel:
    layers: list[Layer]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_dim] + [l.weights.shape[0] for l in self.layers]

    @property
    def activations(self) -> list[str]:
        return [l.activation for l in self.layers]


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-3
    batch_size: int = 100
    steps: int = 20000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    w_p: float = 0.0
    w_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (similarity loss needs pairs)")
        if self.w_p < 0 or self.w_s < 0:
            raise ValueError("loss weights must be >= 0")


def init_mlp(layer_dims: list[int], activations: list[str], rng: np.random.Generator) -> MlpModel:
    """He-style uniform init scaled by fan-in, zero biases."""
    if len(activations) != len(layer_dims) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for fan_in, fan_out, act in zip(layer_dims[:-1], layer_dims[1:], activations):
        limit = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(weights=w, bias=np.zeros(fan_out), activation=act))
    return MlpModel(layers=layers)


def mlp_for(in_dim: int, out_dim: int, hidden_layers: int, hidden_width: int,
            head: str, rng: np.random.Generator) -> MlpModel:
    """The shared trunk shape: hidden ReLU layers plus a projection head."""
    dims = [in_dim] + [hidden_width] * hidden_layers + [out_dim]
    acts = ["relu"] * hidden_layers + [head]
    return init_mlp(dims, acts, rng)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # split by sign for numerical stability at large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return z


def _activation_grad(z: np.ndarray, out: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "sigmoid":
        return out * (1.0 - out)
    return np.ones_like(z)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    out = np.asarray(x, dtype=float)
    for layer in model.layers:
        out = _activate(out @ layer.weights.T + layer.bias, layer.activation)
    return out


def forward_cached(model: MlpModel, x: np.ndarray):
    """Forward pass keeping (input, preactivation, output) per layer."""
    out = np.asarray(x, dtype=float)
    caches = []
    for layer in model.layers:
        z = out @ layer.weights.T + layer.bias
        a = _activate(z, layer.activation)
        caches.append((out, z, a))
        out = a
    return out, caches


@dataclass
class ParamGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def backward(model: MlpModel, caches, grad_out: np.ndarray) -> tuple[ParamGrads, np.ndarray]:
    """Reverse-mode gradients for every parameter and for the input batch."""
    g = np.asarray(grad_out, dtype=float)
    w_grads: list[np.ndarray] = [None] * len(model.layers)
    b_grads: list[np.ndarray] = [None] * len(model.layers)
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        x_in, z, a = caches[idx]
        dz = g * _activation_grad(z, a, layer.activation)
        w_grads[idx] = dz.T @ x_in
        b_grads[idx] = dz.sum(axis=0)
        g = dz @ layer.weights
    return ParamGrads(weights=w_grads, biases=b_grads), g


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7];
    the gradient is evaluated at the clamped value."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    pc = np.clip(p, 1e-7, 1.0 - 1e-7)
    loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    grad = (pc - y) / (pc * (1.0 - pc)) / p.size
    return float(loss), grad


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over the batch of the summed squared per-output errors."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    n = len(pred)
    diff = pred - target
    loss = float(np.sum(diff * diff) / n)
    return loss, 2.0 * diff / n


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: MlpModel, beta1: float = 0.9, beta2: float = 0.999,
                  eps: float = 1e-8) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(l.weights) for l in model.layers],
            v_w=[np.zeros_like(l.weights) for l in model.layers],
            m_b=[np.zeros_like(l.bias) for l in model.layers],
            v_b=[np.zeros_like(l.bias) for l in model.layers],
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(model: MlpModel, grads: ParamGrads, state: AdamState, lr: float) -> None:
    """Standard bias-corrected Adam update, in place."""
    state.t += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for i, layer in enumerate(model.layers):
        for m, v, g, p in (
            (state.m_w[i], state.v_w[i], grads.weights[i], layer.weights),
            (state.m_b[i], state.v_b[i], grads.biases[i], layer.bias),
        ):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def parameter_hash(model: MlpModel) -> str:
    h = hashlib.sha256()
    for layer in model.layers:
        h.update(layer.weights.tobytes())
        h.update(layer.bias.tobytes())
    return h.hexdigest()


def save_checkpoint(model: MlpModel, normalizer: Normalizer | None, metadata: dict,
                    path: str | FilePath) -> None:
    doc = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "architecture": {
            "layer_dims": model.layer_dims,
            "activations": model.activations,
        },
        "weights": [l.weights.flatten().tolist() for l in model.layers],
        "biases": [l.bias.tolist() for l in model.layers],
        "normalizer": normalizer.to_dict() if normalizer is not None else None,
        "training_metadata": metadata,
    }
    FilePath(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | FilePath) -> tuple[MlpModel, Normalizer | None, dict]:
    doc = json.loads(FilePath(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != CHECKPOINT_SCHEMA_VERSION:
        raise VersionError(
            f"checkpoint schema_version {doc.get('schema_version')!r}, "
            f"expected {CHECKPOINT_SCHEMA_VERSION}"
        )
    dims = doc["architecture"]["layer_dims"]
    acts = doc["architecture"]["activations"]
    if len(acts) != len(dims) - 1 or len(doc["weights"]) != len(acts):
        raise VersionError("checkpoint architecture is inconsistent")
    layers = []
    for i, act in enumerate(acts):
        fan_in, fan_out = dims[i], dims[i + 1]
        flat = np.array(doc["weights"][i], dtype=float)
        if flat.size != fan_in * fan_out:
            raise VersionError(
                f"layer {i} weight count {flat.size} does not match dims {fan_out}x{fan_in}"
            )
        bias = np.array(doc["biases"][i], dtype=float)
        if bias.size != fan_out:
            raise VersionError(f"layer {i} bias count {bias.size} does not match {fan_out}")
        layers.append(Layer(weights=flat.reshape(fan_out, fan_in), bias=bias, activation=act))
    model = MlpModel(layers=layers)
    norm = Normalizer.from_dict(doc["normalizer"]) if doc.get("normalizer") else None
    return model, norm, doc.get("training_metadata", {})
