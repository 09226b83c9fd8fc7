import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import floats, sampled_from

from models.ptrig import (arcsin_p, arcsin_p_fast, cos_p, pi_p, pi_p_quadrature, sin_cos_p, sin_p,
                          signed_power)
from utils.errors import DomainError

EXPONENTS = (1.5, 2.0, 3.0, 4.0)


def test_pi_p_known_values():
    assert pi_p(2.0) == pytest.approx(math.pi, rel=1e-15)
    assert pi_p(4.0) == pytest.approx(math.pi / math.sqrt(2.0), rel=1e-14)
    assert pi_p(4.0) == pytest.approx(2.2214414691, abs=1e-10)


@pytest.mark.parametrize("p", (1.2, 1.5, 2.0, 3.0, 7.0))
def test_pi_p_matches_quadrature(p):
    assert pi_p_quadrature(p) == pytest.approx(pi_p(p), rel=1e-10)


@pytest.mark.parametrize("p", (0.5, 1.0, -2.0, math.inf, math.nan))
def test_rejects_invalid_exponent(p):
    with pytest.raises(DomainError):
        pi_p(p)
    with pytest.raises(DomainError):
        sin_p(p, 0.1)


def test_arcsin_p_values():
    assert arcsin_p(3.0, 0.0) == 0.0
    assert arcsin_p(2.0, 0.5) == pytest.approx(math.pi / 6.0, rel=1e-12)
    for p in EXPONENTS:
        assert arcsin_p(p, 1.0) == pytest.approx(pi_p(p) / 2.0, rel=1e-10)
        assert arcsin_p(p, -0.3) == pytest.approx(-arcsin_p(p, 0.3), rel=1e-15)
    with pytest.raises(DomainError):
        arcsin_p(2.0, 1.5)


@pytest.mark.parametrize("p", EXPONENTS)
def test_fast_arcsin_agrees_with_quadrature(p):
    s = np.linspace(-1.0, 1.0, 21)
    np.testing.assert_allclose(arcsin_p_fast(p, s), arcsin_p(p, s), atol=1e-10)


def test_p_two_is_ordinary_trigonometry():
    t = np.linspace(-7.0, 7.0, 101)
    assert np.max(np.abs(sin_p(2.0, t) - np.sin(t))) <= 1e-10
    assert np.max(np.abs(cos_p(2.0, t) - np.cos(t))) <= 1e-10


@pytest.mark.parametrize("p", EXPONENTS)
def test_special_points(p):
    half = pi_p(p) / 2.0
    assert sin_p(p, 0.0) == 0.0
    assert cos_p(p, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert sin_p(p, half) == pytest.approx(1.0, abs=1e-12)
    assert sin_cos_p(p, np.array([half]))[1][0] == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("p", EXPONENTS)
def test_pythagorean_identity(p):
    t = np.linspace(-2.0 * pi_p(p), 2.0 * pi_p(p), 401)
    s, c = sin_cos_p(p, t)
    assert np.max(np.abs(np.abs(s) ** p + np.abs(c) ** p - 1.0)) <= 1e-10


@pytest.mark.parametrize("p", EXPONENTS)
def test_vectorized_path_matches_reference(p):
    t = np.linspace(-pi_p(p), 2.0 * pi_p(p), 37)
    s, c = sin_cos_p(p, t)
    np.testing.assert_allclose(s, sin_p(p, t), atol=1e-9)
    # cos_p is steep in s near the peaks of sin_p
    away = np.abs(s) < 0.99
    np.testing.assert_allclose(c[away], cos_p(p, t[away]), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(sampled_from(EXPONENTS), floats(min_value=-10.0, max_value=10.0))
def test_odd_and_periodic(p, t):
    s, _ = sin_cos_p(p, t)
    minus, _ = sin_cos_p(p, -t)
    shifted, _ = sin_cos_p(p, t + 2.0 * pi_p(p))
    assert minus == pytest.approx(-s, abs=1e-12)
    assert shifted == pytest.approx(s, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(sampled_from(EXPONENTS), floats(min_value=-1.0, max_value=1.0))
def test_sin_inverts_arcsin(p, s):
    assert sin_p(p, arcsin_p(p, s)) == pytest.approx(s, abs=1e-10)


def test_signed_power():
    np.testing.assert_allclose(signed_power(np.array([-8.0, 0.0, 8.0]), 1.0 / 3.0), [-2.0, 0.0, 2.0])
