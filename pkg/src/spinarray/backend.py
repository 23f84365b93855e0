"""Kernel backend selection.

The hot numerical kernels in :mod:`spinarray.kernels` are written in
numba-compatible numpy, so the same source can run either jit-compiled
(default) or as plain numpy. Set the environment variable

    SPIN_ARRAY_BACKEND=numpy

before importing the package to skip compilation entirely. The numpy path
is much slower for long integrations but useful on machines where numba is
unavailable or misbehaving, and for cross-checking compiled results.
"""

import os
import warnings

_VALID = ("numba", "numpy")

BACKEND = os.environ.get("SPIN_ARRAY_BACKEND", "numba").strip().lower()
if BACKEND not in _VALID:
    raise ValueError(
        f"SPIN_ARRAY_BACKEND must be one of {_VALID}, got {BACKEND!r}"
    )


def _nop_njit(*args, **kwargs):
    """Decorator with the njit signature that leaves the function as-is."""
    def decorator(func):
        return func
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return decorator


if BACKEND == "numba":
    try:
        from numba import njit as maybe_njit
        USING_NUMBA = True
    except ImportError:
        warnings.warn(
            "numba could not be imported; falling back to the numpy backend, "
            "which is much slower"
        )
        maybe_njit = _nop_njit
        USING_NUMBA = False
        BACKEND = "numpy"
else:
    maybe_njit = _nop_njit
    USING_NUMBA = False
