"""Activation functions with exact higher-order derivatives.

Derivatives of any order up to ``MAX_ORDER`` come from truncated power-series
("jet") arithmetic: a jet of order ``m`` at ``x`` holds the Taylor coefficients
``f^(k)(x) / k!`` for ``k = 0..m``. Coefficients are stacked along axis 0 so a
single jet evaluates a whole array of points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 15


# ---------------------------------------------------------------------------
# jet arithmetic
# ---------------------------------------------------------------------------

def jet_variable(x, order):
    """Jet of the identity map at ``x``: coefficients (x, 1, 0, ..., 0)."""
    x = np.asarray(x, dtype=float)
    j = np.zeros((order + 1,) + x.shape)
    j[0] = x
    if order >= 1:
        j[1] = 1.0
    return j


def jet_mul(a, b):
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    for k in range(order + 1):
        acc = a[0] * b[k]
        for i in range(1, k + 1):
            acc = acc + a[i] * b[k - i]
        out[k] = acc
    return out


def jet_pow(h, p):
    """h**p for a jet with strictly positive constant term."""
    order = h.shape[0] - 1
    g = np.zeros_like(h)
    g[0] = h[0] ** p
    for k in range(1, order + 1):
        acc = np.zeros_like(h[0])
        for j in range(1, k + 1):
            acc = acc + ((p + 1) * j - k) * h[j] * g[k - j]
        g[k] = acc / (k * h[0])
    return g


def jet_exp(h):
    order = h.shape[0] - 1
    e = np.zeros_like(h)
    e[0] = np.exp(h[0])
    for k in range(1, order + 1):
        acc = np.zeros_like(h[0])
        for j in range(1, k + 1):
            acc = acc + j * h[j] * e[k - j]
        e[k] = acc / k
    return e


# ---------------------------------------------------------------------------
# activation kinds
# ---------------------------------------------------------------------------

class Activation:
    """Base class; subclasses supply ``__call__``, ``grad`` and ``jet``."""

    kind: str = ""

    def __call__(self, x):
        raise NotImplementedError

    def grad(self, x):
        """First derivative in closed form (fast path for training)."""
        raise NotImplementedError

    def jet(self, x, order):
        raise NotImplementedError

    def taylor_coefficients(self, x, order):
        """Array of shape (order + 1, *x.shape) with f^(k)(x) / k!."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in [1, {MAX_ORDER}], got {order}")
        return self.jet(x, order)

    def derivative(self, x, order=1):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in [1, {MAX_ORDER}], got {order}")
        return self.jet(x, order)[order] * math.factorial(order)

    def to_dict(self):
        return {"kind": self.kind}

    @property
    def is_linear(self):
        return False


@dataclass(frozen=True)
class Identity(Activation):
    kind = "identity"

    def __call__(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def grad(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def jet(self, x, order):
        return jet_variable(x, order)

    @property
    def is_linear(self):
        return True


@dataclass(frozen=True)
class LinearSlope(Activation):
    alpha: float = 1.0
    kind = "linear"

    def __call__(self, x):
        return self.alpha * np.asarray(x, dtype=float)

    def grad(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.alpha)

    def jet(self, x, order):
        return self.alpha * jet_variable(x, order)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}

    @property
    def is_linear(self):
        return True


@dataclass(frozen=True)
class ShiftedSigmoid(Activation):
    """Algebraic sigmoid with its inflection point at 0.5 and slope alpha/2 there."""

    alpha: float = 4.0
    kind = "shifted_sigmoid"

    def __call__(self, x):
        z = self.alpha * (np.asarray(x, dtype=float) - 0.5)
        return 0.5 + z / (2.0 * np.sqrt(1.0 + z * z))

    def grad(self, x):
        z = self.alpha * (np.asarray(x, dtype=float) - 0.5)
        return self.alpha / (2.0 * (1.0 + z * z) ** 1.5)

    def jet(self, x, order):
        z = jet_variable(x, order)
        z[0] -= 0.5
        z *= self.alpha
        inv = jet_pow(jet_mul(z, z) + _const_jet(1.0, z), -0.5)
        out = 0.5 * jet_mul(z, inv)
        out[0] = out[0] + 0.5
        return out

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class StandardSigmoid(Activation):
    kind = "sigmoid"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out if out.ndim else out[()]

    def grad(self, x):
        s = self(x)
        return s * (1.0 - s)

    def jet(self, x, order):
        # 1/(1+e^-x) with the exponent sign chosen per point to avoid overflow
        x = np.asarray(x, dtype=float)
        sign = np.where(x >= 0, -1.0, 1.0)
        e = jet_exp(sign * jet_variable(x, order))
        denom = e + _const_jet(1.0, e)
        inv = jet_pow(denom, -1.0)
        return np.where(sign < 0, inv, jet_mul(e, inv))


@dataclass(frozen=True)
class Cubic(Activation):
    """3x^2 - 2x^3: a polynomial sigmoid on (0, 1)."""

    kind = "cubic"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 3.0 * x**2 - 2.0 * x**3

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return 6.0 * x * (1.0 - x)

    def jet(self, x, order):
        v = jet_variable(x, order)
        v2 = jet_mul(v, v)
        return 3.0 * v2 - 2.0 * jet_mul(v2, v)


def _const_jet(c, like):
    out = np.zeros_like(like)
    out[0] = c
    return out


_KINDS = {
    "identity": lambda d: Identity(),
    "linear": lambda d: LinearSlope(float(d.get("alpha", 1.0))),
    "shifted_sigmoid": lambda d: ShiftedSigmoid(float(d.get("alpha", 4.0))),
    "sigmoid": lambda d: StandardSigmoid(),
    "cubic": lambda d: Cubic(),
}


def activation_from_dict(d):
    if isinstance(d, str):
        d = {"kind": d}
    try:
        return _KINDS[d["kind"]](d)
    except KeyError:
        raise ValueError(f"unknown activation kind {d.get('kind')!r}") from None


def activate(kind, x):
    return kind(x)


def derivative(kind, x, order=1):
    return kind.derivative(x, order)
