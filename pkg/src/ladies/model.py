"""GCN forward/backward passes and Adam, in plain numpy.

Layers are ``Z = P H W`` with a rectifier between layers and a linear
output into softmax cross-entropy. No biases, no dropout.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError
from .graph import Laplacian
from .samplers import BatchPlan


@dataclass
class GcnModel:
    weights: list[np.ndarray]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def hidden_dim(self) -> int:
        """Width of the hidden layers (output width for a 1-layer model)."""
        return self.dims[1] if self.num_layers > 1 else self.dims[-1]

    def num_params(self) -> int:
        return sum(w.size for w in self.weights)

    def copy(self) -> "GcnModel":
        return GcnModel([w.copy() for w in self.weights])


def init_weights(dims, rng: np.random.Generator) -> GcnModel:
    """Glorot-uniform weights for a GCN with layer widths ``dims``."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ValueError(f"need at least two positive widths, got {dims}")
    weights = []
    for d_in, d_out in zip(dims, dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
    return GcnModel(weights)


def relu(x):
    return np.maximum(x, 0.0)


def _matmul_chain(prop, h, w):
    # cheaper association for the dense product
    if w.shape[1] < w.shape[0]:
        return prop @ (h @ w)
    return (prop @ h) @ w


def forward_exact(model: GcnModel, p: Laplacian, x) -> np.ndarray:
    """Full-graph logits ``Z^(L)`` for every node."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.num_nodes, model.dims[0]):
        raise ValueError(f"features have shape {x.shape}, expected "
                         f"({p.num_nodes}, {model.dims[0]})")
    return hidden_activations(model, p, x)[-1]


def hidden_activations(model: GcnModel, p: Laplacian, x) -> list[np.ndarray]:
    """``[H^(0)=X, H^(1), ..., H^(L-1), Z^(L)]`` of the exact network."""
    h = np.asarray(x, dtype=np.float64)
    out = [h]
    for l, w in enumerate(model.weights):
        z = _matmul_chain(p.matrix, h, w)
        h = z if l == model.num_layers - 1 else relu(z)
        out.append(h)
    return out


@dataclass
class ForwardTrace:
    """What backprop needs from a sampled forward pass.

    ``aggregated[l]`` is ``P_tilde H_tilde`` feeding weight ``l`` and
    ``preacts[l]`` is the resulting ``Z_tilde``; index 0 is the input layer.
    """

    plan: BatchPlan
    aggregated: list[np.ndarray] = field(default_factory=list)
    preacts: list[np.ndarray] = field(default_factory=list)

    def activation_count(self, width: int) -> int:
        """Stored embeddings ``sum_l rows(Z^(l)) * width``."""
        return int(sum(z.shape[0] for z in self.preacts) * width)


def forward_sampled(model: GcnModel, plan: BatchPlan, x):
    """Logits for ``plan.batch_nodes`` through the sampled blocks, plus a trace."""
    if plan.num_layers != model.num_layers:
        raise ValueError(f"plan has {plan.num_layers} layers, model {model.num_layers}")
    h = np.asarray(x, dtype=np.float64)[plan.input_nodes]
    trace = ForwardTrace(plan)
    for l, (lp, w) in enumerate(zip(reversed(plan.layers), model.weights)):
        if lp.p_tilde.shape[1] != h.shape[0]:
            raise ValueError(f"layer {lp.layer_index}: block has {lp.p_tilde.shape[1]} "
                             f"columns for {h.shape[0]} input rows")
        a = np.asarray(lp.p_tilde @ h)
        z = a @ w
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"non-finite activations at layer {lp.layer_index}")
        trace.aggregated.append(a)
        trace.preacts.append(z)
        h = z if l == model.num_layers - 1 else relu(z)
    return h, trace


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_norm - shifted[np.arange(labels.size), labels]))


def loss_and_grad(model: GcnModel, trace: ForwardTrace, logits, labels):
    """Mean softmax cross-entropy over the batch and its gradient per weight."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    b, c = logits.shape
    if labels.size != b:
        raise ValueError(f"{labels.size} labels for {b} logits")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"label outside [0, {c})")
    loss = cross_entropy(logits, labels)
    delta = softmax(logits)
    delta[np.arange(b), labels] -= 1.0
    delta /= b

    layers = list(reversed(trace.plan.layers))
    grads = [None] * model.num_layers
    for l in range(model.num_layers - 1, -1, -1):
        grads[l] = trace.aggregated[l].T @ delta
        if l == 0:
            break
        d_h = np.asarray(layers[l].p_tilde.T @ (delta @ model.weights[l].T))
        delta = d_h * (trace.preacts[l - 1] > 0)
    return loss, grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0

    @classmethod
    def for_model(cls, model: GcnModel, lr: float = 0.001, **kw) -> "AdamState":
        zeros = [np.zeros_like(w) for w in model.weights]
        return cls([z.copy() for z in zeros], zeros, lr=lr, **kw)


def adam_step(model: GcnModel, adam: AdamState, grads) -> GcnModel:
    """One bias-corrected Adam update, in place."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient")
    adam.step += 1
    bc1 = 1.0 - adam.beta1 ** adam.step
    bc2 = 1.0 - adam.beta2 ** adam.step
    for w, g, m, v in zip(model.weights, grads, adam.m, adam.v):
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * (g * g)
        w -= adam.lr * (m / bc1) / (np.sqrt(v / bc2) + adam.eps)
    return model


_MAGIC = b"GCNW"


def save_model(model: GcnModel, path) -> None:
    """Binary checkpoint: ``GCNW``, uint32 L, uint32 widths[L+1], float64 weights.

    All integers and floats little-endian; weights row-major, layer by layer.
    """
    dims = model.dims
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack(f"<{len(dims) + 1}I", model.num_layers, *dims))
        for w in model.weights:
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


def load_model(path) -> GcnModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a GCN checkpoint")
    (num_layers,) = struct.unpack_from("<I", raw, 4)
    dims = struct.unpack_from(f"<{num_layers + 1}I", raw, 8)
    offset = 8 + 4 * (num_layers + 1)
    weights = []
    for d_in, d_out in zip(dims, dims[1:]):
        w = np.frombuffer(raw, dtype="<f8", count=d_in * d_out, offset=offset)
        weights.append(w.reshape(d_in, d_out).astype(np.float64))
        offset += 8 * d_in * d_out
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes")
    return GcnModel(weights)
