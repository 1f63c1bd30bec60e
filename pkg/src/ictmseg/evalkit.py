"""Synthetic fixtures, ground-truth-derived initializations, metrics and trace export."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .drlse import DrlseParams
from .filters import EdgeParams
from .grid import GridError, as_mask, check_shape, same_shape
from .ictm import IctmParams, IterationTrace

KINDS = ("two_discs", "dumbbell", "bright_square", "ring")
TRACE_HEADER = ["iter", "energy", "energy_minmax_normalized", "flips", "elapsed_s"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry of a synthetic two-level image.

    Discs become balls and squares become cubes on 3D grids.  Unset
    geometry is filled in from the grid size by :func:`default_spec`.
    """

    kind: str
    dims: tuple
    centers: Optional[tuple] = None      # two_discs, dumbbell: two points; ring: one
    radii: Optional[tuple] = None        # two_discs, dumbbell: per disc; ring: (inner, outer)
    neck_width: Optional[float] = None   # dumbbell
    extent: Optional[int] = None         # bright_square side length
    offset: Optional[tuple] = None       # bright_square corner
    foreground: float = 255.0
    background: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0


def default_spec(kind: str, dims, **overrides) -> SyntheticSpec:
    kind = kind.replace("-", "_")
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}; choose from {KINDS}")
    dims = check_shape(dims)
    size = min(dims)
    mid = [(d - 1) / 2 for d in dims]
    geom: dict = {}
    if kind in ("two_discs", "dumbbell"):
        # two objects side by side along the last axis
        sep = 0.5 * dims[-1] if kind == "two_discs" else 0.45 * dims[-1]
        c1, c2 = list(mid), list(mid)
        c1[-1] -= sep / 2
        c2[-1] += sep / 2
        r = 0.18 * size if kind == "two_discs" else 0.17 * size
        geom = dict(centers=(tuple(c1), tuple(c2)), radii=(r, r))
        if kind == "dumbbell":
            geom["neck_width"] = 0.14 * size
    elif kind == "ring":
        geom = dict(centers=(tuple(mid),), radii=(0.15 * size, 0.32 * size))
    else:
        extent = overrides.get("extent") or max(1, size // 2)
        geom = dict(extent=extent, offset=tuple((d - extent) // 2 for d in dims))
    geom.update({k: v for k, v in overrides.items() if v is not None})
    return SyntheticSpec(kind=kind, dims=dims, **geom)


def _coords(dims):
    return np.indices(dims, dtype=np.float64)


def _ball(coords, center, radius):
    d2 = sum((coords[i] - center[i]) ** 2 for i in range(len(center)))
    return d2 <= radius * radius


def _capsule(coords, a, b, width):
    a, b = np.asarray(a, float), np.asarray(b, float)
    ab = b - a
    rel = [coords[i] - a[i] for i in range(len(a))]
    t = np.clip(sum(rel[i] * ab[i] for i in range(len(a))) / float(ab @ ab), 0.0, 1.0)
    d2 = sum((rel[i] - t * ab[i]) ** 2 for i in range(len(a)))
    return d2 <= (width / 2) ** 2


def synth_truth(spec: SyntheticSpec) -> np.ndarray:
    dims = check_shape(spec.dims)
    coords = _coords(dims)
    if spec.kind in ("two_discs", "dumbbell"):
        (c1, c2), (r1, r2) = spec.centers, spec.radii
        truth = _ball(coords, c1, r1) | _ball(coords, c2, r2)
        if spec.kind == "dumbbell":
            truth |= _capsule(coords, c1, c2, spec.neck_width)
    elif spec.kind == "ring":
        (c,), (inner, outer) = spec.centers, spec.radii
        if not 0 < inner < outer:
            raise GridError("ring radii must satisfy 0 < inner < outer")
        truth = _ball(coords, c, outer) & ~_ball(coords, c, inner)
    elif spec.kind == "bright_square":
        truth = np.zeros(dims, dtype=bool)
        start = spec.offset
        if any(s < 0 or s + spec.extent > d for s, d in zip(start, dims)):
            raise GridError("bright square does not fit inside the grid")
        truth[tuple(slice(s, s + spec.extent) for s in start)] = True
    else:
        raise ValueError(f"unknown fixture kind {spec.kind!r}")
    return truth


def _check_geometry(spec: SyntheticSpec, truth: np.ndarray):
    if spec.foreground == spec.background:
        raise GridError("foreground and background intensities must differ")
    if not truth.any():
        raise GridError("fixture geometry is empty")
    if spec.kind == "bright_square":
        return  # tiny enumeration fixtures fill the grid
    for axis, where in enumerate(np.nonzero(truth)):
        if where.min() < 2 or where.max() > spec.dims[axis] - 3:
            raise GridError(f"{spec.kind} geometry leaves less than a 2-pixel margin")


def synth_image(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(image, truth)`` for `spec`; deterministic for a fixed seed."""
    truth = synth_truth(spec)
    _check_geometry(spec, truth)
    image = np.where(truth, float(spec.foreground), float(spec.background))
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)
    return image, truth


# -- initializations -------------------------------------------------------

def bounding_box(mask) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Inclusive ``(lo, hi)`` corners of the foreground."""
    where = np.nonzero(as_mask(mask))
    if where[0].size == 0:
        raise GridError("mask is empty")
    return tuple(int(w.min()) for w in where), tuple(int(w.max()) for w in where)


def bbox_init(truth) -> np.ndarray:
    """Concentric box with every extent of the truth's bounding box halved."""
    truth = as_mask(truth, name="truth")
    lo, hi = bounding_box(truth)
    out = np.zeros(truth.shape, dtype=bool)
    slices = []
    for a, b in zip(lo, hi):
        extent = b - a + 1
        half = max(1, (extent + 1) // 2)  # half-up rounding
        start = a + (extent - half) // 2
        slices.append(slice(start, start + half))
    out[tuple(slices)] = True
    return out


def ball_structure(radius: int, ndim: int) -> np.ndarray:
    r = int(radius)
    grid = np.indices((2 * r + 1,) * ndim) - r
    return (grid ** 2).sum(axis=0) <= r * r


def erode_init(truth, radius: int) -> np.ndarray:
    """Erode with the discrete Euclidean ball; outside the grid counts as background."""
    truth = as_mask(truth, name="truth")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return truth.copy()
    return ndimage.binary_erosion(truth, structure=ball_structure(radius, truth.ndim))


def rect_init(shape, boxes: Sequence[Sequence[int]]) -> np.ndarray:
    """Union of half-open boxes ``(start_0, .., start_n, stop_0, .., stop_n)``."""
    shape = check_shape(shape)
    out = np.zeros(shape, dtype=bool)
    n = len(shape)
    for box in boxes:
        if len(box) != 2 * n:
            raise GridError(f"a {n}D box needs {2 * n} coordinates, got {len(box)}")
        start, stop = box[:n], box[n:]
        for a, b, d in zip(start, stop, shape):
            if not 0 <= a < b <= d:
                raise GridError(f"box {tuple(box)} is empty or outside grid {shape}")
        out[tuple(slice(a, b) for a, b in zip(start, stop))] = True
    return out


@dataclass(frozen=True)
class Fixture:
    """A synthetic experiment: image, truth, shared init and solver settings."""

    image: np.ndarray
    truth: np.ndarray
    init: np.ndarray
    edge: EdgeParams
    ictm: IctmParams
    drlse: DrlseParams


# Clean two-level fixtures need little smoothing; sigma = 15 blurs a
# 128-pixel object until the contour leaks through its edge.
SYNTHETIC_EDGE = EdgeParams(sigma=1.0)


def splitting_fixture(dims=(128, 128)) -> Fixture:
    """Two separate discs inside one enclosing rectangle; the contour must split."""
    image, truth = synth_image(default_spec("two_discs", dims))
    dims = truth.shape
    margin = [max(2, d // 16) for d in dims]
    init = rect_init(dims, [tuple(margin) + tuple(d - m for d, m in zip(dims, margin))])
    return Fixture(image, truth, init, SYNTHETIC_EDGE,
                   IctmParams(tau=2.0, lam=0.3), DrlseParams(lam=3.0))


def merging_fixture(dims=(128, 128)) -> Fixture:
    """One dumbbell seeded by a small box in each lobe; the contours must merge."""
    spec = default_spec("dumbbell", dims)
    image, truth = synth_image(spec)
    half = max(1, int(0.05 * min(truth.shape)))
    boxes = []
    for c in spec.centers:
        c = [int(round(v)) for v in c]
        boxes.append(tuple(v - half for v in c) + tuple(v + half for v in c))
    init = rect_init(truth.shape, boxes)
    return Fixture(image, truth, init, SYNTHETIC_EDGE,
                   IctmParams(tau=2.0, lam=-0.3), DrlseParams(lam=-3.0))


def tiny_fixture() -> Fixture:
    """4x4 image with a 3x3 bright square, small enough to enumerate every mask."""
    image, truth = synth_image(default_spec("bright_square", (4, 4), extent=3))
    return Fixture(image, truth, bbox_init(truth), SYNTHETIC_EDGE,
                   IctmParams(tau=2.0, lam=-0.3), DrlseParams(lam=-3.0))


# -- metrics ---------------------------------------------------------------

def dice(a, b) -> float:
    a, b = as_mask(a), as_mask(b)
    same_shape(a, b)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(a & b)) / total


def connected_components(mask) -> int:
    """Number of face-connected foreground components."""
    _, count = ndimage.label(as_mask(mask))
    return int(count)


# -- trace CSV -------------------------------------------------------------

def minmax_normalize(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def export_trace_csv(trace: IterationTrace, path, *, timing: bool = True) -> None:
    """Write the trace; with ``timing=False`` the elapsed column is all zeros."""
    if len(trace) == 0:
        raise ValueError("cannot export an empty trace")
    normalized = minmax_normalize(trace.energies)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec, norm in zip(trace, normalized):
            elapsed = rec.elapsed if timing else 0.0
            writer.writerow([rec.iteration, repr(rec.energy), repr(float(norm)),
                             rec.flips, repr(elapsed)])


def read_trace_csv(path) -> tuple[IterationTrace, np.ndarray]:
    """Parse an exported trace; returns the trace and the normalized energies."""
    trace, normalized = IterationTrace(), []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        for row in reader:
            trace.append(int(row[0]), float(row[1]), int(row[3]), float(row[4]))
            normalized.append(float(row[2]))
    return trace, np.array(normalized)
