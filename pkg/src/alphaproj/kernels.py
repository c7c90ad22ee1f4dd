"""Backend selection for the brute-force kernels.

The compiled Cython module is used when importable; otherwise (or when the
environment variable ``ALPHAPROJ_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the numpy implementation is used.
"""
import os

from . import _kernels_py

_force_py = os.environ.get("ALPHAPROJ_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

batch_divergence = _impl.batch_divergence
lattice_min = _impl.lattice_min
box_min = _impl.box_min


def backends():
    """Mapping of available backend name to module."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
