"""Scalar grids and binary masks.

Fields are plain ``numpy`` arrays: ``float64`` for scalar fields and
``bool`` for masks, 2D ``(H, W)`` or 3D ``(Z, H, W)`` in C (row-major)
order, so that the linear index of ``(z, y, x)`` is ``z*H*W + y*W + x``.
Spacing is one unit per axis.
"""
from __future__ import annotations

import numpy as np


class GridError(ValueError):
    """Invalid grid shape or contents."""


class ShapeMismatchError(GridError):
    """Two grids that must share a shape do not."""


def check_shape(shape) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if not 2 <= len(shape) <= 3:
        raise GridError(f"grids must be 2D or 3D, got {len(shape)} dimensions")
    if any(s < 1 for s in shape):
        raise GridError(f"every extent must be >= 1, got {shape}")
    return shape


def as_field(values, *, name: str = "field") -> np.ndarray:
    """Return `values` as a contiguous finite float64 grid."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    check_shape(arr.shape)
    if not np.all(np.isfinite(arr)):
        raise GridError(f"{name} contains non-finite values")
    return arr


def as_mask(values, *, name: str = "mask") -> np.ndarray:
    """Return `values` as a contiguous bool grid, rejecting anything but 0/1."""
    arr = np.asarray(values)
    check_shape(arr.shape)
    if arr.dtype != np.bool_:
        if not np.all((arr == 0) | (arr == 1)):
            raise GridError(f"{name} must contain only 0 and 1")
        arr = arr != 0
    return np.ascontiguousarray(arr)


def same_shape(*arrays) -> tuple[int, ...]:
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise ShapeMismatchError(f"shape mismatch: {shape} vs {a.shape}")
    return shape
