"""Densities of layer pre-activations and the integrals the trained-network predictor needs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .analytic import LayerIntegrals

QUAD_RTOL = 1e-8
QUAD_ATOL = 1e-14


class QuadratureError(RuntimeError):
    pass


def _quad(fn, lo, hi, points=None):
    with np.errstate(all="ignore"):
        val, err, _info, *warn = integrate.quad(fn, lo, hi, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=200,
                                                points=points, full_output=1)
    # quad also warns about harmless roundoff; only fail when the error estimate is poor
    if not math.isfinite(val) or (warn and err > max(1e-12, 1e-6 * abs(val))):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge (estimate {val}, error {err})")
    return val


class DensityModel:
    kind = ""

    @property
    def support(self):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def _breakpoints(self):
        return None

    def expect(self, g):
        """Integral of g(z) p(z) over the support."""
        lo, hi = self.support
        return _quad(lambda z: float(g(z)) * float(self.pdf(z)), lo, hi, self._breakpoints())

    def total_mass(self):
        return self.expect(lambda z: 1.0)

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, "params": self.params(), "support": [float(s) for s in self.support]}


@dataclass(frozen=True)
class Empirical(DensityModel):
    edges: np.ndarray
    masses: np.ndarray
    kind = "empirical"

    @property
    def support(self):
        return float(self.edges[0]), float(self.edges[-1])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.masses) - 1)
        dens = self.masses[idx] / np.diff(self.edges)[idx]
        return np.where((x >= self.edges[0]) & (x <= self.edges[-1]), dens, 0.0)

    def expect(self, g):
        # piecewise-constant density: integrate bin by bin
        total = 0.0
        for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.masses):
            if m > 0:
                total += m / (hi - lo) * _quad(lambda z: float(g(z)), lo, hi)
        return total

    def params(self):
        return {"edges": list(map(float, self.edges)), "masses": list(map(float, self.masses))}


@dataclass(frozen=True)
class Normal(DensityModel):
    mean: float
    variance: float
    kind = "normal"
    width: float = 12.0  # support half-width in standard deviations

    @property
    def support(self):
        s = math.sqrt(self.variance)
        return self.mean - self.width * s, self.mean + self.width * s

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mean) ** 2 / self.variance) / math.sqrt(2 * math.pi * self.variance)

    def _breakpoints(self):
        return [self.mean]

    def params(self):
        return {"mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class Uniform(DensityModel):
    lo: float
    hi: float
    kind = "uniform"

    @property
    def support(self):
        return self.lo, self.hi

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def params(self):
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class QuarticExp(DensityModel):
    """exp(c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0) / Z on [lo, hi]."""

    coeffs: tuple  # (c0, c1, c2, c3, c4)
    lo: float
    hi: float
    Z: float = 1.0
    kind = "quartic_exp"

    @property
    def support(self):
        return self.lo, self.hi

    def log_unnormalized(self, x):
        return Polynomial(self.coeffs)(np.asarray(x, dtype=float))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, np.exp(np.where(inside, self.log_unnormalized(x), -np.inf)) / self.Z, 0.0)

    def params(self):
        return {"c": list(map(float, self.coeffs)), "Z": self.Z}


def density_from_dict(d):
    p = d["params"]
    kind = d["kind"]
    if kind == "empirical":
        return Empirical(np.asarray(p["edges"]), np.asarray(p["masses"]))
    if kind == "normal":
        return Normal(p["mean"], p["variance"])
    if kind == "uniform":
        return Uniform(p["lo"], p["hi"])
    if kind == "quartic_exp":
        lo, hi = d["support"]
        return QuarticExp(tuple(p["c"]), lo, hi, p.get("Z", 1.0))
    raise ValueError(f"unknown density kind {kind!r}")


def save_density(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)


def load_density(path):
    with open(path) as fh:
        return density_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# sampling and fitting
# ---------------------------------------------------------------------------

def collect_preactivations(net, inputs):
    """Clean pre-activations of layers 2..N, one flat sample array per layer."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("need at least one input")
    pre, _ = net.forward(X)
    return [p.ravel() for p in pre[1:]]


def default_bins(samples):
    """Freedman-Diaconis bin count clamped to [10, 200]."""
    samples = np.asarray(samples, dtype=float)
    q75, q25 = np.percentile(samples, [75, 25])
    iqr = q75 - q25
    span = np.ptp(samples)
    if iqr <= 0 or span <= 0:
        return 10
    h = 2 * iqr / len(samples) ** (1 / 3)
    return int(np.clip(math.ceil(span / h), 10, 200))


def histogram(samples, bins=None):
    samples = np.asarray(samples, dtype=float)
    if np.ptp(samples) == 0:
        raise ValueError("degenerate sample set: all values are equal")
    bins = default_bins(samples) if bins is None else int(bins)
    counts, edges = np.histogram(samples, bins=bins)
    return edges, counts / counts.sum()


def fit_empirical(samples, bins=None):
    edges, masses = histogram(samples, bins)
    return Empirical(edges, masses)


def fit_normal(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least 2 samples")
    return Normal(float(samples.mean()), float(samples.var(ddof=1)))


def fit_uniform(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least 2 samples")
    return Uniform(float(samples.min()), float(samples.max()))


def fit_quartic_exp(samples, bins=None):
    """Weighted least-squares quartic fit to the log of the histogram density.

    Bins are weighted by their mass; the result is renormalised on the sample
    range widened by 10% on each side.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise ValueError(f"need at least 100 samples, got {samples.size}")
    if bins is not None and bins < 10:
        raise ValueError("need at least 10 bins")
    edges, masses = histogram(samples, bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    dens = masses / np.diff(edges)
    ok = masses > 0
    if ok.sum() < 5:
        raise ValueError(f"only {ok.sum()} non-empty bins; a quartic needs at least 5")
    # Polynomial.fit weights multiply residuals, so sqrt(mass) gives mass-weighted squares
    poly = Polynomial.fit(centers[ok], np.log(dens[ok]), 4, w=np.sqrt(masses[ok])).convert()
    c = np.zeros(5)
    c[: len(poly.coef)] = poly.coef
    span = edges[-1] - edges[0]
    lo, hi = float(samples.min() - 0.1 * span), float(samples.max() + 0.1 * span)
    grid = np.linspace(lo, hi, 2001)
    c[0] -= float(np.max(Polynomial(c)(grid)))  # keep exp() in range
    model = QuarticExp(tuple(map(float, c)), lo, hi, 1.0)
    Z = model.total_mass()
    return QuarticExp(tuple(map(float, c)), lo, hi, Z)


def fit_density(samples, kind, bins=None):
    if kind == "quartic_exp":
        return fit_quartic_exp(samples, bins)
    if kind == "normal":
        return fit_normal(samples)
    if kind == "uniform":
        return fit_uniform(samples)
    if kind == "empirical":
        return fit_empirical(samples, bins)
    raise ValueError(f"unknown density kind {kind!r}")


def density_integrals(p: DensityModel, kind) -> LayerIntegrals:
    """(int f p, int f^2 p, int f'^2 p) over the support of ``p``."""
    f = lambda z: kind(z)
    fp = lambda z: kind.grad(z)
    return LayerIntegrals(
        p.expect(f),
        p.expect(lambda z: f(z) ** 2),
        p.expect(lambda z: fp(z) ** 2),
    )


def write_histogram_csv(samples, path, bins=None):
    edges, masses = histogram(samples, bins)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "mass"])
        for lo, hi, m in zip(edges[:-1], edges[1:], masses):
            w.writerow([repr(float(lo)), repr(float(hi)), repr(float(m))])


def trained_integrals(net, inputs, kind="quartic_exp", bins=None):
    """Fit ``kind`` to the clean pre-activations of every hidden layer and integrate."""
    samples = collect_preactivations(net, inputs)
    out = []
    for n in range(2, net.depth):
        p = fit_density(samples[n - 2], kind, bins)
        out.append(density_integrals(p, net.layers[n - 1].activation))
    return out


def predict_trained(net, inputs, noise, kind="quartic_exp", order=1, bins=None):
    """Predicted output (mean, variance, snr) arrays of shape (T, I_N) plus the S_n list."""
    from .analytic import output_prediction, propagate_trained
    from .network import weight_stats

    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    ints = trained_integrals(net, X, kind, bins)
    S = propagate_trained(weight_stats(net), ints, noise, float(X.mean()), float(np.mean(X * X)))
    pre, _ = net.forward(X)
    m, v, snr = output_prediction(net.layers[-1].activation, pre[-1], S[-1], noise, order)
    return m, v, snr, S
