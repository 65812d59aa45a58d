"""Numba switch.

Hot kernels exist twice: an ``@njit`` loop version and a vectorized numpy
version.  ``MECHENT_DISABLE_NUMBA=1`` (or numba being absent) selects numpy.
Callers may also pass ``backend="numpy"|"numba"`` explicitly.
"""
import os

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("MECHENT_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes")
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn
    if args and callable(args[0]):
        return args[0]
    return wrap


def resolve_backend(backend=None):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
