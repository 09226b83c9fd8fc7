import math

import numpy as np
import pytest

from models.coeffs import CdParams
from models.density import (GridDensity, density_suite, gradient_energy, model_density, mollify, normalize,
                            random_cd_density, read_density_csv, standard_suite, sup_distance, validate_cd,
                            weighted_integral, write_density_csv)
from utils.errors import DensityFormatError, DomainError


def uniform(a, b, nodes=2001):
    return GridDensity(a, (b - a) / (nodes - 1), np.ones(nodes))


def test_grid_density_is_read_only():
    h = uniform(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        h.values[0] = 2.0


@pytest.mark.parametrize("values, step", [(np.ones(3), 0.1), (np.ones(10), 0.0), (-np.ones(10), 0.1),
                                          (np.full(10, np.nan), 0.1)])
def test_grid_density_rejects(values, step):
    with pytest.raises(DomainError):
        GridDensity(0.0, step, values)


def test_normalize():
    h = normalize(uniform(0.0, 2.0))
    np.testing.assert_allclose(h.values, 0.5, rtol=1e-12)
    np.testing.assert_allclose(normalize(h).values, h.values, rtol=1e-12)
    sin = model_density('sin', CdParams(1.0, 2.0, math.pi))
    np.testing.assert_allclose(normalize(sin).values, sin.values / 2.0, rtol=1e-5, atol=1e-12)
    with pytest.raises(DomainError):
        normalize(GridDensity(0.0, 0.1, np.zeros(10)))


def test_interval_masses_are_exact_for_the_interpolant():
    h = GridDensity(0.0, 0.5, np.array([0.0, 1.0, 2.0, 3.0, 4.0]))
    # h(t) = 2t on [0, 2]
    assert h.integral_to(1.0) == pytest.approx(1.0, abs=1e-14)
    assert h.integral_to(0.75) == pytest.approx(0.5625, abs=1e-14)
    assert h.mass_on([(0.25, 0.75), (1.5, 2.0)]) == pytest.approx(0.5 + 1.75, abs=1e-14)
    assert h.inverse_integral(0.5625) == pytest.approx(0.75, abs=1e-12)
    assert h.integral_to(5.0) == pytest.approx(h.mass)


def test_integrals_against_density():
    h = normalize(uniform(0.0, 1.0))
    t = h.nodes
    assert weighted_integral(h, t) == pytest.approx(0.5, abs=1e-12)
    assert gradient_energy(h, 3.0 * t, 2.0) == pytest.approx(9.0, rel=1e-12)


@pytest.mark.parametrize("N", (1.0, 2.0, 5.0))
def test_constant_density_is_cd_zero(N):
    assert validate_cd(uniform(0.0, 3.0), 0.0, N).valid


@pytest.mark.parametrize("N", (2.0, 3.0, 4.5))
def test_sin_model_is_valid(N):
    h = model_density('sin', CdParams(N - 1.0, N, math.pi))
    np.testing.assert_allclose(h.values, np.clip(np.sin(h.nodes), 0.0, None) ** (N - 1.0), atol=1e-15)
    assert validate_cd(h, N - 1.0, N).valid


def test_sinh_is_not_cd_one():
    h = model_density('sinh', CdParams(-1.0, 2.0, 1.0))
    report = validate_cd(h, -1.0, 1.0)
    assert not report.valid
    assert report.witness is not None


@pytest.mark.parametrize("N", (1.0, 1.0 + 1e-7))
def test_dimension_one_needs_a_constant_density(N):
    # exp is log-concave but not constant
    assert not validate_cd(model_density('exp', CdParams(-1.0, 2.0, 1.0)), -1.0, N).valid
    assert validate_cd(uniform(0.0, 3.0), -1.0, N).valid


def test_curvature_is_detected():
    # sin on [0, pi] is CD(1,2) but not CD(2,2)
    h = model_density('sin', CdParams(1.0, 2.0, math.pi))
    assert validate_cd(h, 1.0, 2.0).valid
    report = validate_cd(h, 2.0, 2.0)
    assert not report.valid
    assert report.worst_violation > 1e-3


def test_interior_zero_is_a_violation():
    values = np.ones(101)
    values[50] = 0.0
    report = validate_cd(GridDensity(0.0, 0.01, values), 0.0, 3.0)
    assert not report.valid
    assert report.worst_violation >= 1.0


@pytest.mark.parametrize("kind, K, shift", [('constant', 0.0, 0.0), ('power', 0.0, 1.0), ('sinh', -1.0, 0.0),
                                             ('cosh', -1.0, -0.5), ('exp', -1.0, 0.0), ('sin', 3.0, 0.2)])
def test_model_profiles_are_valid(kind, K, shift):
    h = model_density(kind, CdParams(K, 4.0, 1.0), shift)
    assert h.origin == pytest.approx(shift)
    assert validate_cd(h, K, 4.0).valid


def test_power_profile():
    h = model_density('power', CdParams(0.0, 3.0, 1.0), shift=1.0)
    np.testing.assert_allclose(h.values, h.nodes ** 2, rtol=1e-14)


@pytest.mark.parametrize("kind, K", [('sin', 0.0), ('sinh', 1.0), ('power', -1.0), ('constant', 1.0),
                                     ('bogus', 0.0)])
def test_model_profile_domain(kind, K):
    with pytest.raises(DomainError):
        model_density(kind, CdParams(K, 3.0, 1.0))


def test_random_densities_are_valid(rng):
    for K, N, D in ((0.0, 2.0, 1.0), (2.0, 3.0, math.pi), (-1.0, 3.0, 2.0), (0.0, 1.0, 1.0)):
        h = random_cd_density(K, N, D, rng, 800)
        assert h.mass == pytest.approx(1.0, rel=1e-12)
        assert validate_cd(h, K, N).valid


def test_random_density_domain():
    with pytest.raises(DomainError):
        random_cd_density(1.0, 1.0, 1.0, np.random.default_rng(0))
    with pytest.raises(DomainError):
        random_cd_density(1.0, 2.0, 4.0, np.random.default_rng(0))


def test_standard_suite():
    suite = standard_suite(grid_nodes=200)
    assert len(suite) == 50
    assert all(validate_cd(h, cd.K, cd.N).valid for cd, h in suite)
    assert all(h.length <= cd.D * (1.0 + 1e-12) for cd, h in suite)


def test_density_suite_is_seeded():
    a = density_suite(0.0, 3.0, 1.0, 3, seed=7, grid_nodes=100)
    b = density_suite(0.0, 3.0, 1.0, 3, seed=7, grid_nodes=100)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)


def test_mollified_constant():
    h = uniform(0.0, 1.0, 1001)
    smooth = mollify(h, 2.0, 0.05)
    inside = (smooth.nodes >= 0.05 + 1e-9) & (smooth.nodes <= 1.0)
    np.testing.assert_allclose(smooth.values[inside], 1.0, atol=1e-8)
    assert smooth.origin >= -0.05 - h.step
    assert smooth.end <= 1.05 + h.step
    assert smooth.core == pytest.approx((smooth.origin + 0.1, 1.0), abs=2 * h.step)


@pytest.mark.slow
def test_mollifier_preserves_cd():
    rng = np.random.default_rng(0)
    cases = ((0.0, 3.0, 1.0), (2.0, 3.0, 2.5), (-1.0, 2.5, 2.0), (0.0, 4.0, 1.5))
    for trial in range(200):
        K, N, D = cases[trial % len(cases)]
        h = random_cd_density(K, N, rng.uniform(0.5, 1.0) * D, rng, 600)
        distances = []
        for eps in (0.05, 0.02):
            smooth = mollify(h, N, eps)
            assert validate_cd(smooth, K, N).valid
            distances.append(sup_distance(smooth, h, window=(h.origin + 0.05, h.end)))
        assert distances[1] <= distances[0] + 1e-12


def test_mollifier_converges():
    h = model_density('sin', CdParams(2.0, 3.0, math.pi), grid_nodes=2001)
    distances = [sup_distance(mollify(h, 3.0, eps), h) for eps in (0.1, 0.05, 0.025)]
    assert distances[0] > distances[1] > distances[2]


def test_mollify_domain():
    with pytest.raises(DomainError):
        mollify(uniform(0.0, 1.0), 2.0, 0.0)
    with pytest.raises(DomainError):
        mollify(uniform(0.0, 1.0), 1.0, 0.1)


def test_csv_round_trip(tmp_path):
    h = model_density('cosh', CdParams(-1.0, 3.0, 2.0), shift=-1.0, grid_nodes=50)
    path = tmp_path / 'h.csv'
    write_density_csv(h, str(path))
    back = read_density_csv(str(path))
    np.testing.assert_array_equal(back.values, h.values)
    assert back.origin == h.origin
    assert back.step == pytest.approx(h.step, rel=1e-14)


@pytest.mark.parametrize("text, line", [
    ("x,h\n0,1\n1,1\n2,1\n3,1\n", 1),
    ("t,h\n0,1\n1,abc\n2,1\n3,1\n", 3),
    ("t,h\n0,1\n1,1\n2,-1\n3,1\n", 4),
    ("t,h\n0,1\n1,1\n2.5,1\n3,1\n4,1\n", 4),
])
def test_csv_errors_carry_line_numbers(tmp_path, text, line):
    path = tmp_path / 'bad.csv'
    path.write_text(text)
    with pytest.raises(DensityFormatError) as info:
        read_density_csv(str(path))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")
