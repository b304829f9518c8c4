"""Mini-batch Adam training of small fully connected networks (noiseless)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import Identity, StandardSigmoid
from .network import LayerSpec, Network


@dataclass
class Dataset:
    inputs: np.ndarray  # (T, I_1), entries in [0, 1]
    targets: np.ndarray  # (T, I_N)
    split: str = "train"
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        t = np.asarray(self.targets, dtype=float)
        self.targets = t.reshape(-1, 1) if t.ndim == 1 else t
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets have different row counts")

    def __len__(self):
        return self.inputs.shape[0]

    def subset(self, idx, split=None):
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.inputs[idx], self.targets[idx], split or self.split, labels)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 10
    loss: str = "cross_entropy"  # or "squared_error"
    seed: int = 0
    train_biases: bool = True

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.loss not in ("cross_entropy", "squared_error"):
            raise ValueError(f"unknown loss {self.loss!r}")


def init_network(sizes, hidden=None, output=None, seed=0):
    """Glorot-uniform weights, zero biases."""
    hidden = StandardSigmoid() if hidden is None else hidden
    output = StandardSigmoid() if output is None else output
    rng = np.random.default_rng(seed)
    layers = [LayerSpec(sizes[0], Identity())]
    for n in range(1, len(sizes)):
        lim = math.sqrt(6.0 / (sizes[n - 1] + sizes[n]))
        w = rng.uniform(-lim, lim, size=(sizes[n], sizes[n - 1]))
        act = output if n == len(sizes) - 1 else hidden
        layers.append(LayerSpec(sizes[n], act, w, np.zeros(sizes[n])))
    return Network(tuple(layers))


def _loss_value(y, t, loss):
    if loss == "squared_error":
        return float(np.mean((y - t) ** 2))
    eps = 1e-12
    yc = np.clip(y, eps, 1 - eps)
    return float(-np.mean(np.sum(t * np.log(yc) + (1 - t) * np.log(1 - yc), axis=1)))


def loss_and_grads(weights, biases, activations, X, Y, loss):
    """Loss and its gradients w.r.t. each weight matrix and bias vector.

    Squared error is the mean over samples and outputs; cross-entropy is the
    per-sample sum over sigmoid outputs, averaged over samples.
    """
    posts, pres = [X], [X]
    for w, b, act in zip(weights, biases, activations):
        z = posts[-1] @ w.T + b
        pres.append(z)
        posts.append(act(z))
    y = posts[-1]
    B = X.shape[0]
    out_act = activations[-1]
    if loss == "squared_error":
        delta = 2.0 * (y - Y) / (B * Y.shape[1]) * out_act.grad(pres[-1])
    elif isinstance(out_act, StandardSigmoid):
        delta = (y - Y) / B
    else:
        yc = np.clip(y, 1e-12, 1 - 1e-12)
        delta = (-(Y / yc) + (1 - Y) / (1 - yc)) / B * out_act.grad(pres[-1])
    gw, gb = [None] * len(weights), [None] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        gw[l] = delta.T @ posts[l]
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l]) * activations[l - 1].grad(pres[l])
    return _loss_value(y, Y, loss), gw, gb


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g is None:
                continue
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainResult:
    net: Network
    history: list = field(default_factory=list)  # (epoch, loss, error)


def train(net: Network, data: Dataset, cfg: TrainConfig, eval_data: Dataset | None = None) -> TrainResult:
    if data.inputs.shape[1] != net.layers[0].size or data.targets.shape[1] != net.layers[-1].size:
        raise ValueError(
            f"data shape {data.inputs.shape[1]}->{data.targets.shape[1]} does not match network "
            f"{net.layers[0].size}->{net.layers[-1].size}"
        )
    weights = [np.array(l.weights) for l in net.layers[1:]]
    biases = [np.array(l.biases) for l in net.layers[1:]]
    acts = [l.activation for l in net.layers[1:]]
    params = weights + (biases if cfg.train_biases else [])
    opt = Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)
    rng = np.random.default_rng(cfg.seed)
    T = len(data)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(T)
        for s in range(0, T, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            _, gw, gb = loss_and_grads(weights, biases, acts, data.inputs[idx], data.targets[idx], cfg.loss)
            opt.step(gw + (gb if cfg.train_biases else []))
        current = net.replace_params(weights, biases)
        loss = _loss_value(current.predict(data.inputs), data.targets, cfg.loss)
        err = evaluate(current, eval_data or data, cfg.loss)
        history.append((epoch, loss, err.get("error_rate", err.get("nrmse"))))
    return TrainResult(net.replace_params(weights, biases), history)


def evaluate(net: Network, data: Dataset, loss="cross_entropy"):
    """Classification: argmax mismatch rate. Regression: RMSE normalised by the target std."""
    y = net.predict(data.inputs)
    if loss == "cross_entropy":
        return {"error_rate": float(np.mean(np.argmax(y, axis=1) != np.argmax(data.targets, axis=1)))}
    sd = float(np.std(data.targets))
    if sd == 0:
        raise ValueError("NRMSE undefined: targets have zero variance")
    return {"nrmse": float(np.sqrt(np.mean((y - data.targets) ** 2)) / sd)}


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "error"])
        for row in history:
            w.writerow([row[0], repr(row[1]), repr(row[2])])
