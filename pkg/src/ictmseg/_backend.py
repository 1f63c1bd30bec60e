"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy kernels run.  ``ICTMSEG_BACKEND=python`` forces the fallback and
``ICTMSEG_BACKEND=cython`` makes a missing extension an error.
``SEG_THREADS`` caps the compiled kernels' thread count (default 1).
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

AVAILABLE = {"python": _pykernels}
if _ckernels is not None:
    AVAILABLE["cython"] = _ckernels


def _select(name):
    if name in (None, "", "auto"):
        return _ckernels or _pykernels
    if name not in ("python", "cython"):
        raise ValueError(f"unknown backend {name!r}")
    if name not in AVAILABLE:
        raise ImportError("the compiled kernels (ictmseg._ckernels) are not built")
    return AVAILABLE[name]


_active = _select(os.environ.get("ICTMSEG_BACKEND"))


def threads() -> int:
    raw = os.environ.get("SEG_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring non-integer SEG_THREADS=%r", raw)
        return 1
    return max(1, n)


def active():
    return _active


def set_backend(name) -> str:
    """Switch the process-wide backend; returns the previous backend name."""
    global _active
    previous = _active.NAME
    _active = _select(name)
    return previous


def correlate_axis(x, weights, axis):
    return _active.correlate_axis(x, weights, axis, threads())


def ictm_fused(sqrt_g, g, conv_sqrt_g, conv_u, u, lam):
    return _active.ictm_fused(sqrt_g, g, conv_sqrt_g, conv_u, u, lam)
