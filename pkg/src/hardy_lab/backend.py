"""Kernel backend selection.

HARDY_LAB_BACKEND chooses between the numba-compiled kernels and the pure
numpy fallbacks: "numba", "numpy", or "auto" (default; numba when it
imports). HARDY_LAB_THREADS caps the numba thread count.
"""

import os

from . import _kernels_numpy

_cache = {}


def backend_name() -> str:
    requested = os.environ.get("HARDY_LAB_BACKEND", "auto").lower()
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(f"HARDY_LAB_BACKEND={requested!r}; expected auto|numba|numpy")
    return requested


def _load_numba_kernels():
    if "numba" not in _cache:
        import numba

        threads = os.environ.get("HARDY_LAB_THREADS")
        if threads:
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        from . import _kernels_numba

        _cache["numba"] = _kernels_numba
    return _cache["numba"]


def kernels():
    """Return the active kernel module (resolved per call, so tests can flip
    the env var)."""
    name = backend_name()
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        return _load_numba_kernels()
    try:
        return _load_numba_kernels()
    except Exception:  # pragma: no cover - numba present in normal installs
        return _kernels_numpy
