"""Switch between numba-compiled kernels and their interpreted fallback.

Set ``SLABRT_DISABLE_JIT=1`` in the environment before importing the package
to run every kernel as plain Python/numpy. The interpreted kernels do the
same operations in the same order, so particle paths and all counts are
identical. Compiled and interpreted transcendental functions may differ in
the last ulp, so float tallies agree to about 1e-14 relative, not bitwise.
"""

import os

_FLAG = os.environ.get("SLABRT_DISABLE_JIT", "").strip().lower()
USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

__all__ = ["USE_NUMBA", "kernel", "inline_kernel"]

# Kernels never allocate arrays; they only index buffers owned by the caller.
# Compiling without the numba runtime drops the atomic reference counting that
# otherwise surrounds every array argument of every call (tens of ns each).
_OPTIONS = {"cache": True, "nogil": True, "_nrt": False}
if USE_NUMBA:
    try:
        numba.njit(**_OPTIONS)(lambda: 0)
    except (TypeError, KeyError):  # pragma: no cover - numba without the flag
        _OPTIONS.pop("_nrt")


def kernel(fn):
    """Compile ``fn`` with numba in nopython mode, or return it untouched."""
    if USE_NUMBA:
        return numba.njit(**_OPTIONS)(fn)
    return fn


def inline_kernel(fn):
    """Like ``kernel`` but inlined into callers at the numba IR level."""
    if USE_NUMBA:
        return numba.njit(inline="always", **_OPTIONS)(fn)
    return fn
