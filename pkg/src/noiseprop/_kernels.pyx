# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Philox4x32-10 Gaussian streams and the Mackey-Glass RK4 integrator.

The pure-Python twin lives in ``_fallback.py``; both expose the same three functions.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, sin, pow, isfinite, M_PI
from libc.stdint cimport uint32_t, uint64_t

cnp.import_array()

cdef uint32_t PHILOX_M0 = 0xD2511F53
cdef uint32_t PHILOX_M1 = 0xCD9E8D57
cdef uint32_t PHILOX_W0 = 0x9E3779B9
cdef uint32_t PHILOX_W1 = 0xBB67AE85


cdef inline void _philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t c0, c1, c2, c3
    cdef int r
    c0 = c[0]; c1 = c[1]; c2 = c[2]; c3 = c[3]
    for r in range(10):
        p0 = <uint64_t>PHILOX_M0 * c0
        p1 = <uint64_t>PHILOX_M1 * c2
        c0 = <uint32_t>(p1 >> 32) ^ c1 ^ k0
        c1 = <uint32_t>p1
        c2 = <uint32_t>(p0 >> 32) ^ c3 ^ k1
        c3 = <uint32_t>p0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    c[0] = c0; c[1] = c1; c[2] = c2; c[3] = c3


def philox4x32(counter, key):
    """One Philox4x32-10 block; ``counter`` is 4 words, ``key`` 2 words."""
    cdef uint32_t c[4]
    for i in range(4):
        c[i] = <uint32_t>(int(counter[i]) & 0xFFFFFFFF)
    _philox(c, <uint32_t>(int(key[0]) & 0xFFFFFFFF), <uint32_t>(int(key[1]) & 0xFFFFFFFF))
    return (c[0], c[1], c[2], c[3])


def normals(uint64_t seed, uint32_t t, uint32_t stream, uint32_t k0, Py_ssize_t reps, Py_ssize_t count):
    """Standard normals of shape (reps, count) for counter (block, stream, k0 + row, t)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((reps, count), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint32_t key0 = <uint32_t>(seed & 0xFFFFFFFF)
    cdef uint32_t key1 = <uint32_t>(seed >> 32)
    cdef Py_ssize_t nblocks = (count + 1) // 2
    cdef Py_ssize_t r, b, j
    cdef uint32_t c[4]
    cdef double u1, u2, rad, th
    with nogil:
        for r in range(reps):
            for b in range(nblocks):
                c[0] = <uint32_t>b
                c[1] = stream
                c[2] = k0 + <uint32_t>r
                c[3] = t
                _philox(c, key0, key1)
                u1 = ((c[0] >> 5) * 67108864.0 + (c[1] >> 6) + 0.5) * 1.1102230246251565e-16
                u2 = ((c[2] >> 5) * 67108864.0 + (c[3] >> 6)) * 1.1102230246251565e-16
                rad = sqrt(-2.0 * log(u1))
                th = 2.0 * M_PI * u2
                j = 2 * b
                o[r, j] = rad * cos(th)
                if j + 1 < count:
                    o[r, j + 1] = rad * sin(th)
    return out


cdef inline double _mg_rhs(double x, double d, double beta, double gamma, double expo) noexcept nogil:
    return beta * d / (1.0 + pow(d, expo)) - gamma * x


def mackey_glass_rk4(double beta, double gamma, double expo, Py_ssize_t tau_steps,
                     double dt, double history, Py_ssize_t n_steps):
    """Trajectory x_0..x_n_steps of the delay equation on a grid of spacing dt."""
    if tau_steps < 1:
        raise ValueError("tau_steps must be >= 1")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] traj = np.empty(n_steps + 1, dtype=np.float64)
    cdef double[::1] out = traj
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ring = np.full(tau_steps + 1, history, dtype=np.float64)
    cdef double[::1] buf = ring
    cdef Py_ssize_t L = tau_steps + 1
    cdef Py_ssize_t i, bad = -1
    cdef double x = history, d0, d1, dm, k1, k2, k3, k4
    out[0] = x
    with nogil:
        for i in range(n_steps):
            if i - tau_steps >= 0:
                d0 = buf[(i - tau_steps) % L]
            else:
                d0 = history
            if i - tau_steps + 1 >= 0:
                d1 = buf[(i - tau_steps + 1) % L]
            else:
                d1 = history
            dm = 0.5 * (d0 + d1)
            k1 = _mg_rhs(x, d0, beta, gamma, expo)
            k2 = _mg_rhs(x + 0.5 * dt * k1, dm, beta, gamma, expo)
            k3 = _mg_rhs(x + 0.5 * dt * k2, dm, beta, gamma, expo)
            k4 = _mg_rhs(x + dt * k3, d1, beta, gamma, expo)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not isfinite(x):
                bad = i + 1
                break
            buf[(i + 1) % L] = x
            out[i + 1] = x
    if bad >= 0:
        raise FloatingPointError(f"Mackey-Glass state became non-finite at step {bad}")
    return traj
