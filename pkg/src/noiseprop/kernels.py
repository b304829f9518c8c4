"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``NOISEPROP_PURE=1`` to force
the numpy fallback.
"""
import os

from . import _fallback

if os.environ.get("NOISEPROP_PURE") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

philox4x32 = _impl.philox4x32
normals = _impl.normals
mackey_glass_rk4 = _impl.mackey_glass_rk4

__all__ = ["BACKEND", "philox4x32", "normals", "mackey_glass_rk4"]
