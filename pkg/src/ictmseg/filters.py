"""Gaussian smoothing, gradients, the edge indicator and heat-kernel convolution.

All convolutions are separable, with half-sample symmetric (mirror)
boundary extension, so that the discrete operator is symmetric and
``heat_convolve(1) == 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .grid import GridError, as_field


@dataclass(frozen=True)
class EdgeParams:
    sigma: float = 15.0
    normalize_input: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class KernelSpec:
    """Sampled 1-D heat kernel, applied along every axis."""

    tau: float
    truncation_radius: int
    weights: np.ndarray

    @property
    def std(self) -> float:
        return math.sqrt(2.0 * self.tau)


def _sampled_gaussian(radius: int, two_var: float) -> np.ndarray:
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(i * i) / two_var)
    return w / w.sum()


def gaussian_weights(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return _sampled_gaussian(math.ceil(4.0 * sigma), 2.0 * sigma * sigma)


def make_heat_kernel(tau: float) -> KernelSpec:
    """Discrete ``G_tau``: per-axis std ``sqrt(2 tau)``, truncated at 4 std."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    radius = math.ceil(4.0 * math.sqrt(2.0 * tau))
    weights = _sampled_gaussian(radius, 4.0 * tau)
    weights.setflags(write=False)
    return KernelSpec(tau=float(tau), truncation_radius=radius, weights=weights)


def separable_convolve(field, weights) -> np.ndarray:
    out = as_field(field)
    for axis in range(out.ndim):
        out = _backend.correlate_axis(out, weights, axis)
    return out


def gaussian_smooth(field, sigma: float) -> np.ndarray:
    return separable_convolve(field, gaussian_weights(sigma))


def heat_convolve(field, kernel: KernelSpec) -> np.ndarray:
    return separable_convolve(field, kernel.weights)


def gradient_magnitude_sq(field) -> np.ndarray:
    """Sum of squared central differences (one-sided on boundary cells)."""
    field = as_field(field)
    if min(field.shape) < 2:
        raise GridError(f"every axis needs extent >= 2, got {field.shape}")
    return sum(d * d for d in np.gradient(field))


def normalize_intensity(image) -> np.ndarray:
    """Affine map onto [0, 255]; a constant image maps to zeros."""
    image = as_field(image, name="image")
    lo, hi = image.min(), image.max()
    if hi == lo:
        return np.zeros_like(image)
    return (image - lo) * (255.0 / (hi - lo))


def edge_indicator(image, params: EdgeParams = EdgeParams()) -> np.ndarray:
    """``g = 1 / (1 + |grad(G_sigma * I)|^2)``, in (0, 1]."""
    image = as_field(image, name="image")
    if params.normalize_input:
        image = normalize_intensity(image)
    smoothed = gaussian_smooth(image, params.sigma)
    return 1.0 / (1.0 + gradient_magnitude_sq(smoothed))
