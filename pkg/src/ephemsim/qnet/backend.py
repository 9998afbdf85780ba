"""Kernel backend selection.

The JIT-compiled kernels are the default. Set ``EPHEMSIM_BACKEND=numpy``
to force the pure-numpy path (or =numba to insist on it); with numba not
importable the numpy path is used automatically.
"""

from __future__ import annotations

import os

from . import kernels_numpy

_ENV_VAR = "EPHEMSIM_BACKEND"


def _load():
    choice = os.environ.get(_ENV_VAR, "numba").strip().lower()
    if choice == "numpy":
        return kernels_numpy, "numpy"
    if choice == "numba":
        try:
            from . import kernels_numba
        except ImportError:
            return kernels_numpy, "numpy"
        return kernels_numba, "numba"
    raise ValueError(f"{_ENV_VAR}={choice!r}: expected 'numba' or 'numpy'")


kernels, BACKEND = _load()
