"""Layered fully connected networks, noise intensities and weight statistics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import Activation, Identity, activation_from_dict


@dataclass(frozen=True)
class NoiseConfig:
    """Intensities D of the four neuron noise sources (all >= 0)."""

    d_add_uncorr: float = 0.0
    d_add_corr: float = 0.0
    d_mult_uncorr: float = 0.0
    d_mult_corr: float = 0.0

    def __post_init__(self):
        for name in ("d_add_uncorr", "d_add_corr", "d_mult_uncorr", "d_mult_corr"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    @property
    def sigma2_add(self):
        return 2 * self.d_add_corr + 2 * self.d_add_uncorr

    @property
    def sigma2_mult(self):
        return 2 * self.d_mult_corr + 2 * self.d_mult_uncorr + 4 * self.d_mult_corr * self.d_mult_uncorr

    @property
    def is_zero(self):
        return not (self.d_add_uncorr or self.d_add_corr or self.d_mult_uncorr or self.d_mult_corr)

    def to_dict(self):
        return {
            "d_add_uncorr": self.d_add_uncorr,
            "d_add_corr": self.d_add_corr,
            "d_mult_uncorr": self.d_mult_uncorr,
            "d_mult_corr": self.d_mult_corr,
        }

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"d_add_uncorr", "d_add_corr", "d_mult_uncorr", "d_mult_corr"}
        if unknown:
            raise ValueError(f"unknown noise fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LayerSpec:
    size: int
    activation: Activation
    weights: np.ndarray | None = None  # (size, prev_size)
    biases: np.ndarray | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("layer size must be positive")
        if self.weights is not None:
            object.__setattr__(self, "weights", _frozen(self.weights))
            if self.weights.ndim != 2 or self.weights.shape[0] != self.size:
                raise ValueError(f"weights shape {self.weights.shape} does not match layer size {self.size}")
            b = np.zeros(self.size) if self.biases is None else self.biases
            object.__setattr__(self, "biases", _frozen(b))
            if self.biases.shape != (self.size,):
                raise ValueError(f"biases shape {self.biases.shape} does not match layer size {self.size}")


@dataclass(frozen=True)
class Network:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 2:
            raise ValueError("a network needs at least 2 layers")
        if not isinstance(layers[0].activation, Identity):
            raise ValueError("the input layer must use the identity activation")
        if layers[0].weights is not None:
            raise ValueError("the input layer carries no weights")
        for n in range(1, len(layers)):
            w = layers[n].weights
            if w is None:
                raise ValueError(f"layer {n + 1} is missing its weight matrix")
            if w.shape[1] != layers[n - 1].size:
                raise ValueError(
                    f"layer {n + 1}: weight matrix has {w.shape[1]} columns, previous layer has {layers[n - 1].size} neurons"
                )

    @property
    def sizes(self):
        return [l.size for l in self.layers]

    @property
    def depth(self):
        return len(self.layers)

    def forward(self, inputs):
        """Noiseless pass. Returns (pre, post) lists, one (T, I_n) array per layer."""
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        if x.shape[1] != self.layers[0].size:
            raise ValueError(f"input width {x.shape[1]} != input layer size {self.layers[0].size}")
        pre, post = [x], [x.copy()]
        for layer in self.layers[1:]:
            z = post[-1] @ layer.weights.T + layer.biases
            pre.append(z)
            post.append(layer.activation(z))
        return pre, post

    def predict(self, inputs):
        return self.forward(inputs)[1][-1]

    def replace_params(self, weights, biases):
        """New network with the same layout and the given per-layer parameters (layers 2..N)."""
        layers = [self.layers[0]]
        for layer, w, b in zip(self.layers[1:], weights, biases):
            layers.append(LayerSpec(layer.size, layer.activation, w, b))
        return Network(tuple(layers))

    # -- JSON ---------------------------------------------------------------
    def to_dict(self):
        out = []
        for i, layer in enumerate(self.layers):
            d = {"size": layer.size, "activation": layer.activation.to_dict()}
            if i > 0:
                d["weights"] = layer.weights.tolist()
                d["biases"] = layer.biases.tolist()
            out.append(d)
        return {"layers": out}

    @classmethod
    def from_dict(cls, d):
        layers = []
        for i, ld in enumerate(d["layers"]):
            act = activation_from_dict(ld.get("activation", {"kind": "identity"}))
            if i == 0:
                layers.append(LayerSpec(int(ld["size"]), act))
            else:
                layers.append(LayerSpec(int(ld["size"]), act, np.asarray(ld["weights"], dtype=float),
                                        np.asarray(ld.get("biases", np.zeros(int(ld["size"]))), dtype=float)))
        return cls(tuple(layers))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_symmetric(layer_sizes, activation):
    """Uniform weights 1/I_{n-1}, zero biases; identity on the first and last layer."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError("need at least two positive layer sizes")
    layers = [LayerSpec(sizes[0], Identity())]
    for n in range(1, len(sizes)):
        act = Identity() if n == len(sizes) - 1 else activation
        w = np.full((sizes[n], sizes[n - 1]), 1.0 / sizes[n - 1])
        layers.append(LayerSpec(sizes[n], act, w, np.zeros(sizes[n])))
    return Network(tuple(layers))


def is_symmetric(net, rtol=1e-12):
    for n in range(1, net.depth):
        layer = net.layers[n]
        target = 1.0 / net.layers[n - 1].size
        if not np.allclose(layer.weights, target, rtol=rtol, atol=0) or np.any(layer.biases != 0):
            return False
    return True


@dataclass(frozen=True)
class LayerWeightStats:
    fan_in: int
    mean: float  # mu(W)
    mean_sq: float  # mu(W)^2
    eta: float  # mean of squared entries
    bias_mean: float
    bias_var: float


@dataclass(frozen=True)
class WeightStats:
    layers: tuple = field(default_factory=tuple)  # entry i describes layer i + 2

    def __getitem__(self, n):
        """Stats of layer n (1-based, n >= 2)."""
        if n < 2:
            raise IndexError("weight statistics start at layer 2")
        return self.layers[n - 2]

    def __len__(self):
        return len(self.layers)

    def to_dict(self):
        return {"layers": [dict(n=i + 2, **s.__dict__) for i, s in enumerate(self.layers)]}


def matrix_stats(w, b=None):
    w = np.asarray(w, dtype=float)
    mu = float(w.mean())
    eta = float(np.mean(w * w))
    b = np.zeros(w.shape[0]) if b is None else np.asarray(b, dtype=float)
    return LayerWeightStats(w.shape[1], mu, mu * mu, eta, float(b.mean()), float(b.var()))


def weight_stats(net):
    return WeightStats(tuple(matrix_stats(l.weights, l.biases) for l in net.layers[1:]))
