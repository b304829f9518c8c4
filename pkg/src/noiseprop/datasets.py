"""Task data: IDX image files, scikit-learn's 8x8 digits, and Mackey-Glass series."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .train import Dataset

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IDXFormatError(ValueError):
    pass


def read_idx(path, expected_magic):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise IDXFormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IDXFormatError(f"{path}: unsupported magic 0x{magic:08x} (expected 0x{expected_magic:08x})")
    ndim = magic & 0xFF
    hdr = 4 + 4 * ndim
    if len(raw) < hdr:
        raise IDXFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:hdr])
    n = int(np.prod(dims))
    if len(raw) - hdr < n:
        raise IDXFormatError(f"{path}: truncated payload ({len(raw) - hdr} of {n} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=hdr).reshape(dims)


def one_hot(labels, classes=10):
    out = np.zeros((len(labels), classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def load_idx(images_path, labels_path, split="test"):
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IDXFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(float) / 255.0
    classes = max(10, int(labels.max()) + 1) if labels.size else 10
    return Dataset(X, one_hot(labels.astype(int), classes), split, labels.astype(int))


def load_digits(test_size=0.25, seed=0):
    """scikit-learn's bundled 8x8 digits, pixels scaled to [0, 1]; (train, test).

    ``test_size`` is a fraction of the 1797 images or, if an int, a count.
    """
    from sklearn.datasets import load_digits as _load

    d = _load()
    X = d.data / 16.0
    y = d.target.astype(int)
    idx = np.random.default_rng(seed).permutation(len(y))
    n_test = test_size if isinstance(test_size, (int, np.integer)) else int(round(test_size * len(y)))
    if not 0 < n_test < len(y):
        raise ValueError(f"test split of {n_test} images out of {len(y)}")
    te, tr = idx[:n_test], idx[n_test:]
    full = Dataset(X, one_hot(y), "all", y)
    return full.subset(tr, "train"), full.subset(te, "test")


@dataclass(frozen=True)
class MackeyGlassParams:
    beta: float = 0.2
    gamma: float = 0.1
    exponent: float = 10.0
    tau: float = 17.0
    dt: float = 0.1
    history: float = 1.2
    warmup: int = 10000  # integration steps discarded
    sample_every: int = 10  # integration steps per output sample

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        ratio = self.tau / self.dt
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("tau / dt must be a positive integer")
        if self.sample_every < 1 or self.warmup < 0:
            raise ValueError("sample_every must be >= 1 and warmup >= 0")

    @property
    def tau_steps(self):
        return int(round(self.tau / self.dt))


def mackey_glass(params: MackeyGlassParams, length, rescale=True):
    """``length`` samples of the delay equation after warm-up, RK4-integrated.

    With ``rescale`` the series is mapped to [0, 1] by its min/max.
    """
    n_steps = params.warmup + params.sample_every * (length - 1)
    traj = kernels.mackey_glass_rk4(params.beta, params.gamma, params.exponent, params.tau_steps,
                                    params.dt, params.history, n_steps)
    series = traj[params.warmup::params.sample_every][:length]
    if not rescale:
        return series
    lo, hi = series.min(), series.max()
    if hi == lo:
        raise ValueError("cannot rescale a constant series")
    return (series - lo) / (hi - lo)


def windowize(series, window, split="train"):
    """Sliding windows of ``window`` points, each targeting the next point."""
    s = np.asarray(series, dtype=float)
    if window < 1 or len(s) <= window:
        raise ValueError(f"series of length {len(s)} is too short for window {window}")
    X = np.lib.stride_tricks.sliding_window_view(s, window)[:-1]
    return Dataset(np.array(X), s[window:].reshape(-1, 1), split)
