"""Closed-form layer-by-layer prediction of pre-activation variance and output SNR.

Variance through a nonlinearity is approximated either in first order
(slope squared times input variance) or by an M-th order Taylor expansion with
Gaussian central moments of the pre-activation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .activations import MAX_ORDER, Activation
from .network import Network, NoiseConfig, WeightStats, is_symmetric, matrix_stats


@dataclass
class LayerNoiseBudget:
    """Variance bookkeeping of one layer. Fields are scalars or arrays over inputs t."""

    n: int
    n_corr: object
    n_uncorr: object
    n_prev: object
    var_pre: object
    var_post: object
    mean_post: object
    s_n: object

    def snr(self):
        m = np.asarray(self.mean_post, dtype=float)
        v = np.asarray(self.var_post, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(v > 0, m / np.sqrt(np.where(v > 0, v, 1.0)), np.nan)


def neuron_output_moments(mean_x, var_x, noise: NoiseConfig):
    """Mean and variance of a noisy neuron's output given its clean output moments."""
    mean_y = mean_x
    var_y = noise.sigma2_add + noise.sigma2_mult * np.square(mean_y) + (1 + noise.sigma2_mult) * var_x
    return mean_y, var_y


def preactivation_variance(stats, prev_mean_mu, prev_mean_eta, prev_var_x, noise: NoiseConfig, fan_in=None):
    """The correlated, uncorrelated and propagated parts of Var(x~_n).

    ``stats`` describes W^n; ``prev_mean_mu`` / ``prev_mean_eta`` are the mean and
    mean square of the clean outputs of layer n-1; ``prev_var_x`` is the mean
    variance of those outputs after the nonlinearity.
    """
    I = stats.fan_in if fan_in is None else fan_in
    if I < 1:
        raise ValueError("fan-in must be >= 1")
    i2mu2 = I * I * stats.mean_sq
    ieta = I * stats.eta
    n_corr = i2mu2 * (2 * noise.d_add_corr + 2 * noise.d_mult_corr * np.square(prev_mean_mu))
    n_uncorr = ieta * (2 * noise.d_add_uncorr + 2 * noise.d_mult_uncorr * (1 + 2 * noise.d_mult_corr) * prev_mean_eta)
    # I^2 mu^2 (1 + 2 D^U_M eta / (I mu^2)) written without the division so mu = 0 is safe
    n_prev = (i2mu2 + 2 * noise.d_mult_uncorr * ieta) * (1 + 2 * noise.d_mult_corr) * prev_var_x
    return n_corr, n_uncorr, n_prev


def first_order_F(kind: Activation, mean_pre, var_pre):
    return np.square(kind.derivative(mean_pre, 1)) * var_pre


def gaussian_central_moments(var, order):
    """V_0..V_order of a centred Gaussian with variance ``var``."""
    var = np.asarray(var, dtype=float)
    V = np.zeros((order + 1,) + var.shape)
    V[0] = 1.0
    for m in range(2, order + 1, 2):
        V[m] = (m - 1) * V[m - 2] * var
    return V


def taylor_F(kind: Activation, mean_pre, var_pre, order=1):
    """Variance of f(X), X Gaussian, from the M-th order Taylor expansion of f."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"Taylor order must be in [1, {MAX_ORDER}], got {order}")
    T = kind.taylor_coefficients(mean_pre, order)
    V = gaussian_central_moments(var_pre, 2 * order)
    total = 0.0
    for m in range(1, order + 1):
        total = total + T[m] ** 2 * (V[2 * m] - V[m] ** 2)
        for i in range(1, m):
            total = total + 2 * T[m] * T[i] * (V[m + i] - V[m] * V[i])
    return total


def variance_through(kind, mean_pre, var_pre, order=1):
    if kind.is_linear:
        return first_order_F(kind, mean_pre, var_pre)
    if order == 1:
        return first_order_F(kind, mean_pre, var_pre)
    return taylor_F(kind, mean_pre, var_pre, order)


def propagate_symmetric(net: Network, inputs, noise: NoiseConfig, order=1, keep_uncorrelated=False):
    """Budgets for layers 1..N of a symmetric network, vectorised over scalar inputs.

    Layer 2 uses the full three-term decomposition (exact for the noiseless input
    layer). Deeper layers follow the large-width form in which the uncorrelated
    terms are dropped; ``keep_uncorrelated=True`` keeps them instead.
    """
    if not is_symmetric(net):
        raise ValueError("propagate_symmetric needs a network built by make_symmetric")
    u = np.asarray(inputs, dtype=float)
    if net.layers[0].size == 1 and u.ndim <= 1:
        U = u.reshape(-1, 1)
    else:
        U = np.atleast_2d(u)
    pre, post = net.forward(U)
    zeros = np.zeros(U.shape[0])
    budgets = []
    m1, v1 = neuron_output_moments(post[0][:, 0], zeros, noise)
    budgets.append(LayerNoiseBudget(1, zeros, zeros, zeros, zeros, v1, m1, zeros))
    prev_var_x = zeros
    for n in range(2, net.depth + 1):
        layer = net.layers[n - 1]
        stats = matrix_stats(layer.weights)
        prev_mu = post[n - 2].mean(axis=1)
        prev_eta = np.mean(post[n - 2] ** 2, axis=1)
        nc, nu, npv = preactivation_variance(stats, prev_mu, prev_eta, prev_var_x, noise)
        if n > 2 and not keep_uncorrelated:
            nu = zeros
            npv = (1 + 2 * noise.d_mult_corr) * prev_var_x
        var_pre = nc + nu + npv
        mean_pre = pre[n - 1][:, 0]
        var_x = variance_through(layer.activation, mean_pre, var_pre, order)
        mean_y, var_y = neuron_output_moments(post[n - 1][:, 0], var_x, noise)
        budgets.append(LayerNoiseBudget(n, nc, nu, npv, var_pre, var_y, mean_y, var_pre))
        prev_var_x = var_x
    if np.ndim(inputs) == 0:
        for b in budgets:
            for f in ("n_corr", "n_uncorr", "n_prev", "var_pre", "var_post", "mean_post", "s_n"):
                setattr(b, f, float(np.asarray(getattr(b, f))[0]))
    return budgets


def sn_sequence(kind: Activation, mean_pre_per_layer, s2, depth, order=1, forcing=0.0):
    """S_2..S_depth of the scalar accumulation map.

    ``mean_pre_per_layer[i]`` is the clean pre-activation mean of layer i + 2;
    S_n is S_{n-1} pushed through the layer n-1 nonlinearity (first order: slope
    squared), plus an optional constant ``forcing`` term per layer.
    """
    if s2 < 0:
        raise ValueError("s2 must be non-negative")
    means = list(mean_pre_per_layer)
    if len(means) < depth - 2:
        raise ValueError(f"need {depth - 2} layer means for depth {depth}, got {len(means)}")
    S = [float(s2)]
    for n in range(3, depth + 1):
        S.append(float(variance_through(kind, means[n - 3], S[-1], order)) + forcing)
    return S


def lamerey_pairs(S):
    """(S_{n-1}, S_n) pairs for a cobweb plot."""
    return [(S[i - 1], S[i]) for i in range(1, len(S))]


@dataclass(frozen=True)
class LayerIntegrals:
    """mu(E y), eta(E y), eta(f'(x~)) for one layer."""

    mu: float
    eta: float
    eta_fprime: float


def propagate_trained(stats: WeightStats, integrals, noise: NoiseConfig, input_mean, input_mean_sq):
    """S_2..S_N of a trained network from its weight statistics.

    ``integrals[i]`` holds the density integrals of layer i + 2 (hidden and output
    layers; the output entry is not consumed). ``input_mean`` / ``input_mean_sq``
    are mu and eta of the clean input vector. S_2 follows the same recurrence with
    a noiseless input layer, which for a single unit-weight input reduces to
    sigma_+^2 + sigma_x^2 mu^2(u).
    """
    N = len(stats) + 1
    if len(integrals) < N - 2:
        raise ValueError(f"need density integrals for layers 2..{N - 1}, got {len(integrals)}")
    for i, g in enumerate(integrals[: N - 2]):
        if g is None:
            raise ValueError(f"missing density for layer {i + 2}")
    S = []
    prev_mu, prev_eta, prev_fp, prev_S = input_mean, input_mean_sq, 0.0, 0.0
    for n in range(2, N + 1):
        st = stats[n]
        I = st.fan_in
        s = (I * I * st.mean_sq * (2 * noise.d_add_corr + 2 * noise.d_mult_corr * prev_mu**2)
             + I * st.eta * (2 * noise.d_add_uncorr + 2 * noise.d_mult_uncorr * (1 + 2 * noise.d_mult_corr) * prev_eta)
             + I * st.eta * (1 + noise.sigma2_mult) * prev_fp * prev_S)
        S.append(float(s))
        if n < N:
            g = integrals[n - 2]
            prev_mu, prev_eta, prev_fp, prev_S = g.mu, g.eta, g.eta_fprime, s
    return S


def output_prediction(kind: Activation, pre_mean, s_out, noise: NoiseConfig, order=1):
    """Predicted (mean, variance, snr) of output neurons with clean pre-activations ``pre_mean``."""
    pre_mean = np.asarray(pre_mean, dtype=float)
    mean = kind(pre_mean)
    var_x = variance_through(kind, pre_mean, s_out, order)
    m, v = neuron_output_moments(mean, var_x, noise)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(v > 0, m / np.sqrt(np.where(v > 0, v, 1.0)), np.nan)
    return m, v, snr


def write_budget_csv(budgets, path):
    """Columns n, N_C, N_U, N_prev, var_pre, var_post, S_n (one row per layer, scalar budgets)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "N_C", "N_U", "N_prev", "var_pre", "var_post", "S_n"])
        for b in budgets:
            w.writerow([b.n] + [repr(float(np.mean(getattr(b, f))))
                                for f in ("n_corr", "n_uncorr", "n_prev", "var_pre", "var_post", "s_n")])


def write_lamerey_csv(rows, path):
    """rows: iterables (n, S_prev, S_n) optionally prefixed by alpha."""
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if rows and len(rows[0]) == 4:
            w.writerow(["alpha", "n", "S_prev", "S_n"])
        else:
            w.writerow(["n", "S_prev", "S_n"])
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
