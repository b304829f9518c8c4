"""Monte-Carlo noisy forward passes and per-neuron mean/variance/SNR estimates.

Every Gaussian draw is addressed by a Philox counter (block, layer, repetition, input
index) under the key ``master_seed``, so results do not depend on how the work is
split across threads. Layout of the draws of layer n for one (t, k):

    j = 0            correlated additive
    j = 1            correlated multiplicative
    j = 2 .. I+1     uncorrelated additive, one per neuron
    j = I+2 .. 2I+1  uncorrelated multiplicative, one per neuron
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .network import Network, NoiseConfig

MASK64 = (1 << 64) - 1


class NumericalError(FloatingPointError):
    """A non-finite value appeared during a simulation."""


@dataclass
class NoiseStream:
    """Counter-based source of standard normals for one input index t."""

    master_seed: int
    t: int = 0

    def layer_draws(self, layer, width, k0, reps):
        """(reps, 2 + 2 * width) normals for layer ``layer`` (1-based), repetitions k0..k0+reps-1."""
        return kernels.normals(self.master_seed & MASK64, self.t, layer, k0, reps, 2 + 2 * width)


def apply_noise(x, noise, draws):
    """Noise operator on a (reps, I) block of clean outputs using the draws layout above."""
    width = x.shape[1]
    c_add = draws[:, 0:1]
    c_mult = draws[:, 1:2]
    u_add = draws[:, 2:2 + width]
    u_mult = draws[:, 2 + width:2 + 2 * width]
    y = x * (1.0 + math.sqrt(2 * noise.d_mult_uncorr) * u_mult) * (1.0 + math.sqrt(2 * noise.d_mult_corr) * c_mult)
    y += math.sqrt(2 * noise.d_add_uncorr) * u_add
    y += math.sqrt(2 * noise.d_add_corr) * c_add
    return y


def _check_finite(a, layer, what):
    if not np.all(np.isfinite(a)):
        idx = np.argwhere(~np.isfinite(a))[0]
        raise NumericalError(f"non-finite {what} in layer {layer}, neuron {idx[-1] + 1}")


def forward_noisy(net: Network, inputs, noise: NoiseConfig, stream: NoiseStream, k0=0, reps=1,
                  return_pre=False):
    """``reps`` noisy passes of one input vector.

    Returns a list of (reps, I_n) output arrays, one per layer; with ``return_pre``
    also the matching list of pre-activations.
    """
    u = np.asarray(inputs, dtype=float).reshape(-1)
    if u.shape[0] != net.layers[0].size:
        raise ValueError(f"input length {u.shape[0]} != input layer size {net.layers[0].size}")
    quiet = noise.is_zero
    outs, pres = [], []
    prev = None
    for n, layer in enumerate(net.layers, start=1):
        if n == 1:
            pre = np.broadcast_to(u, (reps, u.shape[0]))
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                pre = prev @ layer.weights.T + layer.biases
        _check_finite(pre, n, "pre-activation")
        x = layer.activation(pre)
        if quiet:
            y = np.array(x, dtype=float, copy=True)
        else:
            y = apply_noise(x, noise, stream.layer_draws(n, layer.size, k0, reps))
        _check_finite(y, n, "output")
        outs.append(y)
        pres.append(pre)
        prev = y
    return (outs, pres) if return_pre else outs


class _ShiftedMoments:
    """Streaming mean/unbiased variance over axis 0, shifted by the first row.

    Shifting keeps the sums well conditioned and gives exactly zero variance for
    columns that never change.
    """

    def __init__(self):
        self.ref = None
        self.count = 0
        self.s1 = self.s2 = None

    def add(self, block):
        block = np.asarray(block, dtype=float)
        if self.ref is None:
            self.ref = block[0].copy()
            self.s1 = np.zeros_like(self.ref)
            self.s2 = np.zeros_like(self.ref)
        d = block - self.ref
        self.s1 += d.sum(axis=0)
        self.s2 += np.einsum("ki,ki->i", d, d)
        self.count += block.shape[0]

    def result(self):
        k = self.count
        var = (self.s2 - self.s1 * self.s1 / k) / (k - 1)
        return self.ref + self.s1 / k, np.maximum(var, 0.0)


@dataclass
class MonteCarloEstimate:
    """Per (t, layer, neuron) statistics over K noisy repetitions.

    ``mean[n]`` etc. are (T, I) arrays for layer n+1 (0-based list index).
    """

    mean: list
    variance: list
    pre_mean: list
    pre_variance: list
    K: int
    master_seed: int
    meta: dict = field(default_factory=dict)

    @property
    def depth(self):
        return len(self.mean)

    def snr(self, layer):
        """SNR of layer ``layer`` (1-based); NaN marks an undefined value (zero variance)."""
        m = self.mean[layer - 1]
        v = self.variance[layer - 1]
        out = np.full(m.shape, np.nan)
        ok = v > 0
        out[ok] = m[ok] / np.sqrt(v[ok])
        return out


def _estimate_one(net, u, noise, K, seed, t, chunk):
    stream = NoiseStream(seed, t)
    acc_y = [_ShiftedMoments() for _ in net.layers]
    acc_pre = [_ShiftedMoments() for _ in net.layers]
    for k0 in range(0, K, chunk):
        reps = min(chunk, K - k0)
        ys, pres = forward_noisy(net, u, noise, stream, k0=k0, reps=reps, return_pre=True)
        for n in range(net.depth):
            acc_y[n].add(ys[n])
            acc_pre[n].add(pres[n])
    return [acc_y[n].result() + acc_pre[n].result() for n in range(net.depth)]


def estimate(net: Network, inputs, noise: NoiseConfig, K: int, master_seed: int, workers=1,
             chunk=None) -> MonteCarloEstimate:
    """Run K noisy passes per input row and collect per-neuron moments.

    Deterministic for a fixed ``master_seed`` regardless of ``workers``.
    """
    if K < 2:
        raise ValueError(f"K must be >= 2 for a variance estimate, got {K}")
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    T = X.shape[0]
    if chunk is None:
        widest = max(net.sizes)
        chunk = max(1, min(K, 4_000_000 // (8 * widest)))
    seed = int(master_seed) & MASK64

    def job(t):
        return _estimate_one(net, X[t], noise, K, seed, t, chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(T)))
    else:
        results = [job(t) for t in range(T)]

    depth = net.depth
    fields = [[np.stack([results[t][n][q] for t in range(T)]) for n in range(depth)] for q in range(4)]
    return MonteCarloEstimate(fields[0], fields[1], fields[2], fields[3], K, seed,
                              meta={"T": T, "backend": kernels.BACKEND})


def snr_curve(est: MonteCarloEstimate, layer: int):
    """(mean, snr) points of one layer, one per (t, neuron); undefined SNRs are dropped.

    Returns ``(points, omitted)`` with ``points`` of shape (P, 2).
    """
    if not 1 <= layer <= est.depth:
        raise IndexError(f"layer {layer} out of range 1..{est.depth}")
    m = est.mean[layer - 1].ravel()
    s = est.snr(layer).ravel()
    ok = np.isfinite(s)
    return np.column_stack([m[ok], s[ok]]), int((~ok).sum())


def write_layer_csv(est: MonteCarloEstimate, layer: int, path):
    """CSV with columns t, neuron, mean, variance, snr (snr empty when undefined)."""
    m = est.mean[layer - 1]
    v = est.variance[layer - 1]
    s = est.snr(layer)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "neuron", "mean", "variance", "snr"])
        for t in range(m.shape[0]):
            for i in range(m.shape[1]):
                w.writerow([t, i + 1, repr(float(m[t, i])), repr(float(v[t, i])),
                            "" if not np.isfinite(s[t, i]) else repr(float(s[t, i]))])
