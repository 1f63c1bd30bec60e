"""Geodesic active contour segmentation by iterative convolution-thresholding.

The level-set (DRLSE) baseline, synthetic fixtures and evaluation helpers
ship alongside the solver.
"""
from ._backend import active as active_backend, set_backend
from .drlse import DrlseParams, NumericalBlowupError, drlse_run, drlse_step
from .evalkit import (SyntheticSpec, bbox_init, connected_components, default_spec,
                      dice, erode_init, export_trace_csv, rect_init, synth_image)
from .filters import EdgeParams, edge_indicator, heat_convolve, make_heat_kernel
from .grid import GridError, ShapeMismatchError
from .ictm import (IctmParams, IterationTrace, SegmentationResult, fixed_point_check,
                   ictm_energy, ictm_run, linearized_potential, threshold)
from .io import FormatError, read_image, read_mask, write_image, write_mask

__version__ = "0.1.0"
