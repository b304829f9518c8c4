"""Pure numpy/Python versions of the compiled kernels in ``_kernels.pyx``.

Bit-identical Philox words; normals agree with the compiled path to a few ulp
(numpy and libm transcendental functions may round differently).
"""
import math

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def _philox_arrays(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _SHIFT) ^ c1 ^ np.uint64(k0), p1 & _MASK, (p0 >> _SHIFT) ^ c3 ^ np.uint64(k1), p0 & _MASK
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def philox4x32(counter, key):
    words = [np.asarray(int(c) & 0xFFFFFFFF, dtype=np.uint64) for c in counter]
    out = _philox_arrays(*words, int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF)
    return tuple(int(w) for w in out)


def normals(seed, t, stream, k0, reps, count):
    seed = int(seed)
    nblocks = (count + 1) // 2
    shape = (reps, nblocks)
    c0 = np.broadcast_to(np.arange(nblocks, dtype=np.uint64)[None, :], shape)
    c1 = np.full(shape, stream, dtype=np.uint64)
    c2 = np.broadcast_to(((k0 + np.arange(reps, dtype=np.uint64)) & _MASK)[:, None], shape)
    c3 = np.full(shape, t, dtype=np.uint64)
    x0, x1, x2, x3 = _philox_arrays(c0, c1, c2, c3, seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF)
    u1 = ((x0 >> np.uint64(5)).astype(np.float64) * 67108864.0 + (x1 >> np.uint64(6)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = ((x2 >> np.uint64(5)).astype(np.float64) * 67108864.0 + (x3 >> np.uint64(6)).astype(np.float64)) * 2.0**-53
    rad = np.sqrt(-2.0 * np.log(u1))
    th = 2.0 * math.pi * u2
    out = np.empty((reps, 2 * nblocks))
    out[:, 0::2] = rad * np.cos(th)
    out[:, 1::2] = rad * np.sin(th)
    return np.ascontiguousarray(out[:, :count])


def _mg_rhs(x, d, beta, gamma, expo):
    return beta * d / (1.0 + d**expo) - gamma * x


def mackey_glass_rk4(beta, gamma, expo, tau_steps, dt, history, n_steps):
    if tau_steps < 1:
        raise ValueError("tau_steps must be >= 1")
    L = tau_steps + 1
    buf = [float(history)] * L
    out = np.empty(n_steps + 1)
    x = float(history)
    out[0] = x
    for i in range(n_steps):
        d0 = buf[(i - tau_steps) % L] if i - tau_steps >= 0 else history
        d1 = buf[(i - tau_steps + 1) % L] if i - tau_steps + 1 >= 0 else history
        dm = 0.5 * (d0 + d1)
        k1 = _mg_rhs(x, d0, beta, gamma, expo)
        k2 = _mg_rhs(x + 0.5 * dt * k1, dm, beta, gamma, expo)
        k3 = _mg_rhs(x + 0.5 * dt * k2, dm, beta, gamma, expo)
        k4 = _mg_rhs(x + dt * k3, d1, beta, gamma, expo)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if isinstance(x, complex) or not math.isfinite(x):
            raise FloatingPointError(f"Mackey-Glass state became non-finite at step {i + 1}")
        buf[(i + 1) % L] = x
        out[i + 1] = x
    return out
