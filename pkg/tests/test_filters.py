import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ictmseg.filters import (EdgeParams, edge_indicator, gaussian_smooth, gradient_magnitude_sq,
                             heat_convolve, make_heat_kernel, normalize_intensity)
from ictmseg.grid import GridError

import oracles

taus = st.floats(0.5, 4.0)
seeds = st.integers(0, 2**32 - 1)


def _random_field(seed, ndim=None, lo=2, hi=9):
    rng = np.random.default_rng(seed)
    ndim = ndim or int(rng.integers(2, 4))
    shape = tuple(int(n) for n in rng.integers(lo, hi + 1, size=ndim))
    return rng.normal(size=shape)


# -- kernel construction --------------------------------------------------

@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0, 3.7, 4.0])
def test_heat_kernel_unit_sum_and_symmetry(tau):
    k = make_heat_kernel(tau)
    assert abs(k.weights.sum() - 1.0) < 1e-12
    assert np.array_equal(k.weights, k.weights[::-1])
    assert np.all(k.weights > 0)
    assert k.truncation_radius == math.ceil(4 * math.sqrt(2 * tau))


def test_heat_kernel_tau2_radius_8_and_ratios():
    k = make_heat_kernel(2.0)
    assert k.truncation_radius == 8
    w0 = k.weights[8]
    for i in range(1, 9):
        assert math.isclose(k.weights[8 + i] / w0, math.exp(-i * i / 8.0), rel_tol=1e-13)


def test_heat_kernel_std_matches_continuous():
    # sampled variance of the discrete kernel approaches 2 tau
    k = make_heat_kernel(2.0)
    i = np.arange(-8, 9)
    assert math.isclose(float(np.sum(k.weights * i * i)), 4.0, rel_tol=1e-3)
    assert k.std == 2.0


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_non_positive_parameters(bad):
    with pytest.raises(ValueError):
        make_heat_kernel(bad)
    with pytest.raises(ValueError):
        gaussian_smooth(np.zeros((3, 3)), bad)
    with pytest.raises(ValueError):
        EdgeParams(sigma=bad)


# -- convolution oracles --------------------------------------------------

def test_gaussian_impulse_9x9_matches_direct_sum():
    field = np.zeros((9, 9))
    field[4, 4] = 1.0
    got = gaussian_smooth(field, 1.0)
    want = oracles.direct_sum(field, *oracles.gaussian_weight_table(1.0))
    assert np.max(np.abs(got - want)) < 1e-12


def test_heat_7x7_tau_half_matches_direct_sum():
    field = np.random.default_rng(11).normal(size=(7, 7))
    got = heat_convolve(field, make_heat_kernel(0.5))
    want = oracles.direct_heat(field, 0.5)
    assert np.max(np.abs(got - want)) <= 1e-10 * np.max(np.abs(want))


@settings(max_examples=25, deadline=None)
@given(seed=seeds, tau=taus)
def test_separable_equals_direct_nd(seed, tau):
    field = _random_field(seed)
    got = heat_convolve(field, make_heat_kernel(tau))
    want = oracles.direct_heat(field, tau)
    assert np.max(np.abs(got - want)) <= 1e-10 * np.max(np.abs(want))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=taus, c=st.floats(-1e3, 1e3))
def test_constant_is_preserved(seed, tau, c):
    shape = _random_field(seed).shape
    out = heat_convolve(np.full(shape, c), make_heat_kernel(tau))
    assert np.max(np.abs(out - c)) <= 1e-12 * max(1.0, abs(c))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=taus)
def test_maximum_principle(seed, tau):
    field = _random_field(seed, hi=12)
    out = heat_convolve(field, make_heat_kernel(tau))
    assert out.min() >= field.min() - 1e-12
    assert out.max() <= field.max() + 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=taus, a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_linearity(seed, tau, a, b):
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=(2, 8, 7))
    k = make_heat_kernel(tau)
    lhs = heat_convolve(a * f + b * h, k)
    rhs = a * heat_convolve(f, k) + b * heat_convolve(h, k)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, abs(a) + abs(b)) * 10


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=taus)
def test_mass_preservation(seed, tau):
    # reflection makes the operator doubly stochastic, so the sum is kept
    field = _random_field(seed, hi=12)
    out = heat_convolve(field, make_heat_kernel(tau))
    assert abs(out.sum() - field.sum()) <= 1e-10 * np.abs(field).sum()


@settings(max_examples=20, deadline=None)
@given(seed=seeds, tau=taus)
def test_operator_is_symmetric(seed, tau):
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=(2, 6, 9))
    k = make_heat_kernel(tau)
    assert math.isclose(float(np.sum(h * heat_convolve(f, k))),
                        float(np.sum(f * heat_convolve(h, k))), rel_tol=1e-9, abs_tol=1e-12)


def test_symmetric_input_gives_symmetric_output():
    rng = np.random.default_rng(2)
    half = rng.normal(size=(9, 5))
    field = np.concatenate([half, half[:, ::-1]], axis=1)
    field = field + field[::-1]
    out = gaussian_smooth(field, 1.5)
    assert np.allclose(out, out[:, ::-1], atol=1e-13)
    assert np.allclose(out, out[::-1], atol=1e-13)


# -- gradients and the edge indicator ----------------------------------------

def test_gradient_constant_and_ramp():
    assert np.all(gradient_magnitude_sq(np.full((5, 6), 3.0)) == 0)
    ramp = np.tile(3.0 * np.arange(7.0), (4, 1))
    assert np.all(gradient_magnitude_sq(ramp) == 9.0)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_gradient_matches_stencil_oracle(seed):
    field = np.random.default_rng(seed).normal(size=(5, 5))
    assert np.array_equal(gradient_magnitude_sq(field), oracles.grad_sq_oracle(field))


def test_gradient_needs_extent_two():
    with pytest.raises(GridError):
        gradient_magnitude_sq(np.zeros((1, 5)))


def test_normalize_intensity():
    assert np.array_equal(normalize_intensity(np.array([[2.0, 4.0, 3.0]])), [[0, 255, 127.5]])
    assert np.all(normalize_intensity(np.full((2, 2), 7.0)) == 0)


def test_edge_indicator_constant_image_is_one():
    for normalize in (True, False):
        g = edge_indicator(np.full((6, 6), 40.0), EdgeParams(sigma=2.0, normalize_input=normalize))
        assert np.all(g == 1.0)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.5, 4.0))
def test_edge_indicator_bounds(seed, sigma):
    image = np.random.default_rng(seed).uniform(0, 255, size=(12, 10))
    g = edge_indicator(image, EdgeParams(sigma=sigma))
    assert g.min() > 0 and g.max() <= 1


def test_edge_indicator_minimum_next_to_step():
    image = np.zeros((10, 16))
    image[:, 8:] = 255.0
    params = EdgeParams(sigma=1.5)
    g = edge_indicator(image, params)
    # brute-force formula evaluation with the oracle pieces
    smooth = oracles.direct_sum(normalize_intensity(image), *oracles.gaussian_weight_table(1.5))
    brute = 1.0 / (1.0 + oracles.grad_sq_oracle(smooth))
    assert np.allclose(g, brute, rtol=1e-10)
    cols = np.unique(np.nonzero(g == g.min())[1])
    assert set(cols) <= {7, 8}
