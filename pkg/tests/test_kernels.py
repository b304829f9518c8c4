import numpy as np
import pytest

from noiseprop import _fallback, kernels

try:
    from noiseprop import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_fallback] + ([_kernels] if _kernels is not None else [])

# Random123 known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_philox_known_answers(mod, ctr, key, expected):
    assert tuple(int(v) for v in mod.philox4x32(ctr, key)) == expected


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
def test_backends_agree():
    a = _fallback.normals(2024, 3, 2, 5, 64, 37)
    b = _kernels.normals(2024, 3, 2, 5, 64, 37)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
    a = _fallback.mackey_glass_rk4(0.2, 0.1, 10.0, 170, 0.1, 1.2, 5000)
    b = _kernels.mackey_glass_rk4(0.2, 0.1, 10.0, 170, 0.1, 1.2, 5000)
    np.testing.assert_allclose(a, b, rtol=1e-13)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_normals_are_standard(mod):
    z = mod.normals(7, 0, 1, 0, 20000, 10).ravel()
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / z.size)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_normals_addressing(mod):
    full = mod.normals(99, 4, 3, 0, 10, 6)
    part = mod.normals(99, 4, 3, 7, 3, 6)
    np.testing.assert_array_equal(full[7:], part)
    # odd counts are a prefix of the next even count
    np.testing.assert_array_equal(mod.normals(99, 4, 3, 0, 2, 5), mod.normals(99, 4, 3, 0, 2, 6)[:, :5])
    assert not np.array_equal(full, mod.normals(99, 5, 3, 0, 10, 6))
    assert not np.array_equal(full, mod.normals(99, 4, 2, 0, 10, 6))
    assert not np.array_equal(full, mod.normals(100, 4, 3, 0, 10, 6))
