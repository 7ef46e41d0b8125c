"""Backend selection for the propagation kernel.

The compiled extension is preferred when it imports cleanly; otherwise the
NumPy fallback is used.  Setting ANNEALML_PURE_PYTHON=1 forces the fallback
regardless (useful for benchmarking and for testing backend parity).
"""

import os

from . import kernels_py

try:
    from . import _kernels
except ImportError:  # not built; source checkout without compilation
    _kernels = None

if _kernels is not None and not os.environ.get("ANNEALML_PURE_PYTHON"):
    _active = _kernels
else:
    _active = kernels_py

BACKEND = _active.NAME
SUPPORTS_THREADS = _active.SUPPORTS_THREADS
rk4_evolve_batch = _active.rk4_evolve_batch


def available_backends():
    """Names of importable kernel backends ("cython" first when built)."""
    names = []
    if _kernels is not None:
        names.append(_kernels.NAME)
    names.append(kernels_py.NAME)
    return names


def get_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name == kernels_py.NAME:
        return kernels_py
    if _kernels is not None and name == _kernels.NAME:
        return _kernels
    raise ValueError(f"unknown or unavailable backend: {name!r}")
