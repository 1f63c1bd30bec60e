"""Pure numpy hot kernels (fallback for ``_ckernels``).

Summation order matches the compiled kernels term by term, so both
backends return bitwise-equal convolutions.
"""
import numpy as np

NAME = "python"


def reflect_index(n: int, radius: int) -> np.ndarray:
    """Source index for positions ``-radius .. n+radius-1`` under half-sample
    symmetric extension (``d c b a | a b c d | d c b a``), period ``2n``."""
    return np.pad(np.arange(n), radius, mode="symmetric")


def correlate_axis(x, weights, axis: int, nthreads: int = 1) -> np.ndarray:
    """Correlate `x` with the odd-length 1-D `weights` along `axis`."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    radius = len(weights) // 2
    n = x.shape[axis]
    padded = np.take(x, reflect_index(n, radius), axis=axis)
    view = np.moveaxis(padded, axis, 0)
    out = weights[0] * view[0:n]
    for k in range(1, len(weights)):
        out += weights[k] * view[k:k + n]
    return np.ascontiguousarray(np.moveaxis(out, 0, axis))


def ictm_fused(sqrt_g, g, conv_sqrt_g, conv_u, u, lam: float):
    """One thresholding pass given ``conv_u = G * (sqrt(g) u)``.

    Returns ``(u_next, flips, perimeter_sum, area_sum)`` where the two sums
    are the energy terms of the *current* `u`:
    ``sum sqrt(g) u (G*sqrt(g) - conv_u)`` and ``sum g u``.
    """
    phi = sqrt_g * (conv_sqrt_g - 2.0 * conv_u) + lam * g
    u_next = phi <= 0.0
    flips = int(np.count_nonzero(u_next != u))
    perimeter = float(np.sum((sqrt_g * (conv_sqrt_g - conv_u))[u]))
    area = float(np.sum(g[u]))
    return u_next, flips, perimeter, area
