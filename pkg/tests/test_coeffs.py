import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis.strategies import floats

from models.coeffs import (INF, CdParams, bonnet_myers_bound, c_delta, jacobian_model, model_log_derivative,
                           s_delta, sigma, tan_kn, tau, truncation_window)
from utils.errors import DomainError

unit = floats(min_value=0.0, max_value=1.0)
angles = floats(min_value=0.0, max_value=3.0)
dimensions = floats(min_value=1.0, max_value=10.0)


@given(floats(min_value=-5.0, max_value=5.0), dimensions, unit)
def test_sigma_without_distance_is_t(K, N, t):
    assert sigma(K, N, t, 0.0) == t


def test_sigma_branches():
    assert sigma(1.0, 1.0, 0.5, math.pi / 2.0) == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-15)
    assert sigma(1.0, 2.0, 0.3, 1.5 * math.pi) == INF
    assert sigma(-1.0, 1.0, 0.5, 2.0) == pytest.approx(math.sinh(1.0) / math.sinh(2.0), rel=1e-14)


def test_sigma_large_negative_curvature_does_not_overflow():
    value = sigma(-1.0, 1.0, 0.5, 2000.0)
    assert value == pytest.approx(math.exp(-1000.0), rel=1e-10) or value == 0.0
    assert math.isfinite(sigma(-1.0, 1.0, 0.999, 2000.0))


@given(floats(min_value=0.01, max_value=5.0), dimensions, unit, angles)
def test_sigma_orders_by_curvature_sign(k, N, t, theta):
    positive = sigma(k, N, t, theta)
    negative = sigma(-k, N, t, theta)
    assert negative <= t + 1e-12
    assert positive >= t - 1e-12


@pytest.mark.parametrize("args", [(0.0, 1.0, 2.0, 0.5), (0.0, 1.0, -0.1, 0.5), (0.0, -1.0, 0.5, 0.5)])
def test_sigma_domain(args):
    K, N, t, theta = args
    with pytest.raises(DomainError):
        sigma(K, N, t, theta)


curvatures = floats(min_value=-5.0, max_value=5.0)


@given(curvatures, curvatures, floats(min_value=0.1, max_value=10.0), unit, angles)
def test_sigma_is_nondecreasing_in_curvature(K1, K2, N, t, theta):
    lo, hi = sorted((K1, K2))
    # stay clear of the blow-up where sin(x) loses its relative precision
    assume(hi * theta * theta <= 0.99 * N * math.pi ** 2)
    a, b = sigma(lo, N, t, theta), sigma(hi, N, t, theta)
    assert a <= b + 1e-12 * max(1.0, abs(b))


@given(curvatures, floats(min_value=0.0, max_value=10.0), angles)
def test_sigma_endpoints(K, N, theta):
    for t, expected in ((0.0, 0.0), (1.0, 1.0)):
        value = sigma(K, N, t, theta)
        if math.isfinite(value):
            assert value == expected


@given(floats(min_value=-5.0, max_value=-1e-3), dimensions, unit, angles)
def test_tau_pair_is_subunit_for_negative_curvature(K, N, t, theta):
    total = tau(K, N, 1.0 - t, theta) + tau(K, N, t, theta)
    assert total ** N <= 1.0 + 1e-12


@given(dimensions, unit, angles)
def test_tau_flat_is_t(N, t, theta):
    assert tau(0.0, N, t, theta) == pytest.approx(t, rel=1e-12, abs=1e-300)


@given(floats(min_value=-5.0, max_value=5.0), unit, angles)
def test_tau_dimension_one_is_t(K, t, theta):
    assert tau(K, 1.0, t, theta) == t


def test_tau_beyond_bonnet_myers_is_infinite():
    assert tau(1.0, 3.0, 0.5, 1.5 * math.pi) == INF
    assert tau(1.0, 3.0, 0.0, 1.5 * math.pi) == 0.0
    with pytest.raises(DomainError):
        tau(0.0, 0.5, 0.5, 1.0)


def test_tan_kn():
    assert tan_kn(0.0, 3.0, 1.2) == 0.0
    assert tan_kn(2.0, 3.0, 0.0) == 0.0
    for t in (-1.0, 0.3, 2.5):
        assert tan_kn(-2.0, 3.0, t) == pytest.approx(math.tanh(t), rel=1e-14)
    with pytest.raises(DomainError):
        tan_kn(2.0, 3.0, math.pi / 2.0)
    with pytest.raises(DomainError):
        tan_kn(1.0, 1.0, 0.1)


def test_model_log_derivative_matches_cos_power():
    # h = cos(t)^(N-1) for K = N - 1
    N, t = 3.0, 0.4
    assert model_log_derivative(N - 1.0, N, t) == pytest.approx(-(N - 1.0) * math.tan(t), rel=1e-14)
    assert model_log_derivative(-(N - 1.0), N, t) == pytest.approx((N - 1.0) * math.tanh(t), rel=1e-14)
    assert model_log_derivative(0.0, N, t) == 0.0


def test_s_and_c_delta():
    t = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(s_delta(0.0, t), t)
    np.testing.assert_allclose(s_delta(-1.0, t), np.sinh(t), rtol=1e-14)
    np.testing.assert_allclose(s_delta(4.0, t), np.sin(2.0 * t) / 2.0, rtol=1e-14)
    for delta in (-3.0, 0.0, 0.5):
        assert c_delta(delta, 0.0) == 1.0


def test_truncation_window():
    assert truncation_window(0.0, 1.0) == pytest.approx((-math.pi / 2.0, math.pi / 2.0))
    assert truncation_window(1.0, 0.0) == (-1.0, INF)
    assert truncation_window(-2.0, 0.0) == (-INF, 0.5)
    assert truncation_window(0.5, -1.0) == (-INF, INF)
    lo, hi = truncation_window(2.0, -1.0)
    assert hi == INF
    assert math.cosh(lo) + 2.0 * math.sinh(lo) == pytest.approx(0.0, abs=1e-12)


def test_jacobian_model():
    assert jacobian_model(0.7, -1.0, 3.0, 0.0) == 1.0
    assert jacobian_model(0.0, 1.0, 1.0, 0.5) == 0.0
    assert jacobian_model(0.0, 1.0, 1.0, 0.0) == 1.0
    N = 3.0
    t = np.linspace(-2.5, 2.5, 51)
    expected = np.where(np.abs(t) <= math.pi / 2.0, np.clip(np.cos(t), 0.0, None) ** (N - 1.0), 0.0)
    np.testing.assert_allclose(jacobian_model(0.0, N - 1.0, N, t), expected, atol=1e-15)
    with pytest.raises(DomainError):
        jacobian_model(0.0, 1.0, 0.5, 0.0)


def test_cd_params():
    cd = CdParams(2.0, 3.0, math.pi)
    assert cd.bonnet_myers_bound == pytest.approx(math.pi)
    assert cd.at_bonnet_myers
    assert cd.delta == 1.0
    assert not CdParams(2.0, 3.0, 1.0).at_bonnet_myers
    assert bonnet_myers_bound(-1.0, 3.0) == INF
    with pytest.raises(DomainError):
        CdParams(0.0, 0.5)
    with pytest.raises(DomainError):
        CdParams(0.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        CdParams(1.0, 1.0).delta
