"""Backend selection for the hot kernels.

The compiled extension is used when it was built and importable; the
numpy fallback is used otherwise, or when ``SPLTRACK_PURE=1`` is set.
"""
import os

from . import _kernels_py

_pure = os.environ.get("SPLTRACK_PURE", "").strip() not in ("", "0")

try:
    if _pure:
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

guided_weights = _impl.guided_weights
two_peaks = _impl.two_peaks
coordinate_descent = _impl.coordinate_descent
spectral_losses = _impl.spectral_losses
weighted_spectra = _impl.weighted_spectra


def backends():
    """Map backend name to module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
